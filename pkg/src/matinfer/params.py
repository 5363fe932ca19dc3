"""Parameter descriptions: truncated-Gaussian continuous parameters plus
categorical discrete choices, with the bounded/unconstrained reparameterization
used by the optimizer and sampler.

The unconstrained map is a componentwise scaled logit: u = logit((x-lo)/(hi-lo)).
Sampling and optimization run in u-space with the log-Jacobian correction, so
truncation never needs proposal rejection.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


@dataclass(frozen=True)
class ContinuousParam:
    """Truncated Gaussian prior over one bounded scalar."""
    name: str
    mean: float
    std: float
    low: float
    high: float
    role: str = ""

    def __post_init__(self):
        if not (self.low < self.high):
            raise ValueError(f"{self.name}: low must be < high")
        if self.std <= 0:
            raise ValueError(f"{self.name}: std must be positive")

    @property
    def log_trunc_norm(self) -> float:
        """log of the truncated-Gaussian normalization constant."""
        z = (_norm_cdf((self.high - self.mean) / self.std)
             - _norm_cdf((self.low - self.mean) / self.std))
        return math.log(z)


@dataclass(frozen=True)
class DiscreteParam:
    """Categorical prior over a fixed number of choices."""
    name: str
    cardinality: int
    pmf: tuple = ()
    role: str = ""

    def __post_init__(self):
        if self.cardinality < 1:
            raise ValueError(f"{self.name}: cardinality must be >= 1")
        if not self.pmf:
            object.__setattr__(self, "pmf", tuple([1.0 / self.cardinality] * self.cardinality))
        if len(self.pmf) != self.cardinality:
            raise ValueError(f"{self.name}: pmf length mismatch")
        if abs(sum(self.pmf) - 1.0) > 1e-9:
            raise ValueError(f"{self.name}: pmf must sum to 1")


@dataclass(frozen=True)
class ParamSpec:
    """Ordered parameter layout of one material model."""
    model: str
    continuous: tuple
    discrete: tuple = ()

    @property
    def n_continuous(self) -> int:
        return len(self.continuous)

    @property
    def n_discrete(self) -> int:
        return len(self.discrete)

    def names(self) -> list:
        return [p.name for p in self.continuous]

    def index(self, name: str) -> int:
        for i, p in enumerate(self.continuous):
            if p.name == name:
                return i
        raise KeyError(name)

    def prior_mode(self) -> np.ndarray:
        """Clip prior means into the open truncation interval."""
        out = np.empty(self.n_continuous)
        for i, p in enumerate(self.continuous):
            span = p.high - p.low
            out[i] = min(max(p.mean, p.low + 1e-6 * span), p.high - 1e-6 * span)
        return out

    def sample_prior(self, rng: np.random.Generator):
        """Draw (theta_c, theta_d) from the prior by rejection per component."""
        theta_c = np.empty(self.n_continuous)
        for i, p in enumerate(self.continuous):
            while True:
                x = rng.normal(p.mean, p.std)
                if p.low < x < p.high:
                    theta_c[i] = x
                    break
        theta_d = np.array([rng.choice(p.cardinality, p=np.asarray(p.pmf))
                            for p in self.discrete], dtype=np.int64)
        return theta_c, theta_d

    def manifest(self) -> dict:
        """Human-readable parameter manifest (names, roles, priors, transform)."""
        return {
            "model": self.model,
            "transform": "scaled-logit between (low, high) and the real line",
            "continuous": [
                {"name": p.name, "role": p.role, "prior_mean": p.mean,
                 "prior_std": p.std, "low": p.low, "high": p.high}
                for p in self.continuous
            ],
            "discrete": [
                {"name": p.name, "role": p.role, "cardinality": p.cardinality,
                 "pmf": list(p.pmf)}
                for p in self.discrete
            ],
        }

    def manifest_hash(self) -> str:
        blob = json.dumps(self.manifest(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def validate(self, theta_c: np.ndarray, theta_d: np.ndarray):
        theta_c = np.asarray(theta_c, dtype=np.float64)
        theta_d = np.asarray(theta_d, dtype=np.int64)
        if theta_c.shape != (self.n_continuous,):
            raise ValueError(f"{self.model}: expected {self.n_continuous} continuous parameters, "
                             f"got {theta_c.shape}")
        if theta_d.shape != (self.n_discrete,):
            raise ValueError(f"{self.model}: expected {self.n_discrete} discrete parameters")
        for i, p in enumerate(self.continuous):
            if not (p.low <= theta_c[i] <= p.high):
                raise ValueError(f"{self.model}.{p.name}={theta_c[i]!r} outside [{p.low}, {p.high}]")
        for i, p in enumerate(self.discrete):
            if not (0 <= theta_d[i] < p.cardinality):
                raise ValueError(f"{self.model}.{p.name} index {theta_d[i]} out of range")
        return theta_c, theta_d


@dataclass
class ParamVector:
    """One concrete parameter assignment theta = (theta_c, theta_d)."""
    spec: ParamSpec
    theta_c: np.ndarray
    theta_d: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.theta_c, self.theta_d = self.spec.validate(self.theta_c, self.theta_d)

    def as_dict(self) -> dict:
        return dict(zip(self.spec.names(), self.theta_c.tolist()))


# ---------------------------------------------------------------------------
# bounded <-> unconstrained
# ---------------------------------------------------------------------------

def to_unconstrained(theta_c: np.ndarray, spec: ParamSpec) -> np.ndarray:
    theta_c = np.asarray(theta_c, dtype=np.float64)
    u = np.empty_like(theta_c)
    for i, p in enumerate(spec.continuous):
        t = (theta_c[i] - p.low) / (p.high - p.low)
        if not (0.0 < t < 1.0):
            raise ValueError(f"{p.name}={theta_c[i]!r} is on or outside the truncation boundary")
        u[i] = math.log(t / (1.0 - t))
    return u


def from_unconstrained(u: np.ndarray, spec: ParamSpec):
    """Map u back to bounded values; also return the log |det Jacobian|.

    log(s(1-s)) is evaluated as -|u| - 2*log1p(exp(-|u|)), which stays
    finite however extreme u gets.
    """
    u = np.asarray(u, dtype=np.float64)
    theta = np.empty_like(u)
    log_jac = 0.0
    for i, p in enumerate(spec.continuous):
        s = 1.0 / (1.0 + math.exp(-u[i])) if u[i] >= 0 else math.exp(u[i]) / (1.0 + math.exp(u[i]))
        theta[i] = p.low + (p.high - p.low) * s
        a = abs(u[i])
        log_jac += math.log(p.high - p.low) - a - 2.0 * math.log1p(math.exp(-a))
    return theta, log_jac


def bounded_vars(u: ad.Var, spec: ParamSpec):
    """Differentiable from-unconstrained: scalar Vars by name + log-Jacobian Var.

    Uses the same overflow-safe log-Jacobian form as `from_unconstrained`;
    the resulting |u| penalty also keeps samplers away from the transform's
    saturated tails.
    """
    params = {}
    log_jac = ad.constant(0.0)
    for i, p in enumerate(spec.continuous):
        ui = u[i]
        s = ad.sigmoid(ui)
        params[p.name] = ad.constant(p.low) + s * (p.high - p.low)
        au = ad.maximum(ui, -1.0 * ui)
        log_jac = log_jac + ad.constant(math.log(p.high - p.low)) \
            - au - ad.log(1.0 + ad.exp(-1.0 * au)) * 2.0
    return params, log_jac


# ---------------------------------------------------------------------------
# prior log densities
# ---------------------------------------------------------------------------

def log_prior(theta_c: np.ndarray, theta_d: np.ndarray, spec: ParamSpec) -> float:
    """Sum of truncated-Gaussian log densities plus discrete log pmf.

    Returns -inf for out-of-bounds continuous values (a valid return, not an
    error).
    """
    theta_c = np.asarray(theta_c, dtype=np.float64)
    total = 0.0
    for i, p in enumerate(spec.continuous):
        x = theta_c[i]
        if not (p.low < x < p.high):
            return -math.inf
        zscore = (x - p.mean) / p.std
        total += -0.5 * zscore * zscore - math.log(p.std) - _LOG_SQRT_2PI - p.log_trunc_norm
    for i, p in enumerate(spec.discrete):
        total += math.log(p.pmf[int(theta_d[i])])
    return total


def log_prior_vars(params: dict, theta_d: np.ndarray, spec: ParamSpec) -> ad.Var:
    """Differentiable continuous log prior (values already inside bounds by
    construction of the logit transform) plus the constant discrete term."""
    total = ad.constant(0.0)
    for p in spec.continuous:
        x = params[p.name]
        z = (x - p.mean) * (1.0 / p.std)
        total = total + z * z * -0.5 + ad.constant(
            -math.log(p.std) - _LOG_SQRT_2PI - p.log_trunc_norm)
    for i, p in enumerate(spec.discrete):
        total = total + ad.constant(math.log(p.pmf[int(theta_d[i])]))
    return total
