"""The negative log posterior over material parameters.

Combines the truncated-Gaussian/categorical prior, the forward model, the
collocated renderer, a summary function, and a diagonal Gaussian error
model.  The continuous parameters are handled in unconstrained space with
the log-Jacobian correction, so the density the sampler sees is smooth and
unbounded-support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import params as pr
from .render import CameraRig, render_collocated
from .summaries import SummaryVector, layouts_match


class NonFiniteForwardError(RuntimeError):
    """The forward evaluation produced non-finite values; carries a theta dump."""


@dataclass(frozen=True)
class ErrorModel:
    """Diagonal summary-error standard deviations (Sigma_e)."""
    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64)
        if (s <= 0).any():
            raise ValueError("all error-model entries must be positive")
        object.__setattr__(self, "sigma", s)

    @classmethod
    def relative(cls, target: SummaryVector, rel: float = 0.05, floor: float = 1e-3):
        """Per-component sigma proportional to the target summary magnitude."""
        return cls(np.maximum(np.abs(target.values) * rel, floor))


class Posterior:
    """Evaluates (and differentiates) the negative log posterior for one run."""

    def __init__(self, model, z, rig: CameraRig, summary_fn,
                 target: SummaryVector, error: ErrorModel):
        if len(error.sigma) != len(target.values):
            raise ValueError("error model dimension does not match the target summary")
        self.model = model
        self.spec = model.spec
        self.z = z
        self.rig = rig
        self.summary_fn = summary_fn
        self.target = target
        self.error = error
        self._inv_sigma = 1.0 / error.sigma

    # -- forward pieces ---------------------------------------------------

    def _summary_var(self, params: dict, theta_d: np.ndarray):
        maps = self.model.generate(params, theta_d, self.z,
                                   self.rig.resolution, self.rig.texel_size)
        img = render_collocated(maps, self.rig)
        vals, layout = self.summary_fn(img)
        if not layouts_match(layout, self.target.layout):
            raise ValueError("candidate summary layout does not match the target summary")
        return vals

    def _data_term_var(self, params: dict, theta_d: np.ndarray):
        vals = self._summary_var(params, theta_d)
        zscore = (vals - ad.constant(self.target.values)) * ad.constant(self._inv_sigma)
        return ad.asum(zscore * zscore) * 0.5

    # -- public evaluations -----------------------------------------------

    def data_term(self, theta_c: np.ndarray, theta_d: np.ndarray) -> float:
        """Summary mismatch 0.5 * sum(((S - S_t)/sigma)^2) at bounded values."""
        theta_c, theta_d = self.spec.validate(theta_c, theta_d)
        params = {n: ad.constant(v) for n, v in zip(self.spec.names(), theta_c)}
        with ad.Tape():
            return float(self._data_term_var(params, theta_d).value)

    def nlp_bounded(self, theta_c: np.ndarray, theta_d: np.ndarray) -> float:
        """Negative log posterior at bounded values (no Jacobian term)."""
        lp = pr.log_prior(theta_c, theta_d, self.spec)
        if lp == -np.inf:
            return np.inf
        return self.data_term(theta_c, theta_d) - lp

    def nlp_u(self, u: np.ndarray, theta_d: np.ndarray,
              with_grad: bool = True):
        """Negative log posterior in unconstrained space, optionally with its
        gradient; raises NonFiniteForwardError with a parameter dump when the
        forward evaluation explodes."""
        try:
            with ad.Tape() as tape:
                uv = ad.Var(np.asarray(u, dtype=np.float64))
                params, log_jac = pr.bounded_vars(uv, self.spec)
                nlp = (self._data_term_var(params, theta_d)
                       - pr.log_prior_vars(params, theta_d, self.spec)
                       - log_jac)
                if with_grad:
                    g = tape.gradients(nlp, [uv])[0]
                    return float(nlp.value), g
                return float(nlp.value)
        except ad.NonFiniteError as e:
            theta_c, _ = pr.from_unconstrained(u, self.spec)
            raise NonFiniteForwardError(
                f"{e} at theta_c={np.round(theta_c, 6).tolist()} "
                f"theta_d={np.asarray(theta_d).tolist()} (model {self.spec.model})"
            ) from e

    def render_image(self, theta_c: np.ndarray, theta_d: np.ndarray) -> np.ndarray:
        theta_c, theta_d = self.spec.validate(theta_c, theta_d)
        with ad.Tape():
            maps = self.model.generate_from_values(theta_c, theta_d, self.z,
                                                   self.rig.resolution, self.rig.texel_size)
            return np.asarray(render_collocated(maps, self.rig).value)
