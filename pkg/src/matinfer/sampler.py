"""Mixed-kernel MCMC over (theta_c, theta_d), plus MAP estimation.

Each iteration mutates either the continuous parameters (probability alpha)
with a preconditioned MALA proposal, or the discrete ones (probability
1 - alpha) by uniformly resampling their joint pmf; a Metropolis-Hastings
correction then accepts or keeps the previous state.  The continuous state
lives in unconstrained space; recorded samples carry the bounded values.

The diagonal preconditioner is an RMSProp-style running estimate of squared
gradients, updated only from accepted-state gradients and frozen after a
configurable iteration so the tail of the chain targets a fixed kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .posterior import NonFiniteForwardError

_MAX_CONSECUTIVE_BAD = 50


@dataclass
class SamplerConfig:
    n_samples: int = 2000
    alpha: float | None = None      # None: 0.9 with discrete params, else 1.0
    tau: float | None = None        # None: tuned before recording starts
    burn_in: int = 500              # paper-typical band is 200..1000
    seed: int = 0
    freeze_after: int | None = None  # preconditioner freeze; None: at burn_in
    precond_decay: float = 0.99
    precond_eps: float = 1e-8

    def __post_init__(self):
        if self.alpha is not None and not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        if self.tau is not None and self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0 <= self.burn_in < self.n_samples):
            raise ValueError("burn_in must be < n_samples")


class Preconditioner:
    """Diagonal RMSProp-style scaling of gradient space."""

    def __init__(self, dim: int, decay: float = 0.99, eps: float = 1e-8):
        self.v = np.zeros(dim)
        self.decay = decay
        self.eps = eps
        self.frozen = False
        self._warm = False

    def update(self, grad: np.ndarray):
        if self.frozen:
            return
        g2 = grad * grad
        if not self._warm:
            self.v = g2.copy()
            self._warm = True
        else:
            self.v = self.decay * self.v + (1.0 - self.decay) * g2
    def diag(self) -> np.ndarray:
        return 1.0 / (np.sqrt(self.v) + self.eps)


@dataclass
class ChainSample:
    t: int
    theta_c: np.ndarray
    theta_d: np.ndarray
    nlp: float
    accepted: bool


@dataclass
class ChainResult:
    samples: list
    tau: float
    accept_rate_continuous: float
    accept_rate_discrete: float
    config: SamplerConfig
    aborted: str | None = None

    def post_burn_in(self):
        return self.samples[self.config.burn_in:]


def _mala_mean(u: np.ndarray, grad_nlp: np.ndarray, tau: float, m: np.ndarray):
    # drift ascends log p, i.e. descends the negative log posterior
    return u - 0.5 * tau * m * grad_nlp


def _gauss_logpdf(x: np.ndarray, mean: np.ndarray, var: np.ndarray) -> float:
    d = x - mean
    return float(-0.5 * np.sum(d * d / var) - 0.5 * np.sum(np.log(2.0 * math.pi * var)))


def mala_propose(u: np.ndarray, grad_nlp: np.ndarray, tau: float,
                 m: np.ndarray, rng: np.random.Generator):
    """Preconditioned Langevin proposal.

    Returns (u_proposed, log_q_forward, forward_variance); the caller
    computes the reverse density from the gradient at the proposal via
    `mala_log_q`.
    """
    mean = _mala_mean(u, grad_nlp, tau, m)
    var = tau * m
    u_new = mean + np.sqrt(var) * rng.standard_normal(u.shape)
    return u_new, _gauss_logpdf(u_new, mean, var), var


def mala_log_q(u_from: np.ndarray, grad_nlp_from: np.ndarray,
               u_to: np.ndarray, tau: float, m: np.ndarray) -> float:
    """log q(u_to | u_from) for the MALA kernel with preconditioner m."""
    return _gauss_logpdf(u_to, _mala_mean(u_from, grad_nlp_from, tau, m), tau * m)


def discrete_propose(theta_d: np.ndarray, discrete_spec, rng: np.random.Generator):
    """Independent uniform resample of every discrete coordinate (symmetric)."""
    if not discrete_spec:
        raise ValueError("no discrete parameters to propose; run with alpha = 1")
    return np.array([rng.integers(p.cardinality) for p in discrete_spec], dtype=np.int64)


def mh_accept(nlp_new: float, nlp_old: float, log_q_ratio: float,
              rng: np.random.Generator) -> bool:
    """Accept with probability min(1, exp(nlp_old - nlp_new + log_q_ratio))."""
    log_a = nlp_old - nlp_new + log_q_ratio
    if log_a >= 0:
        return not math.isinf(nlp_new)  # never accept a +inf target
    return math.log(rng.uniform()) < log_a


def _safe_eval(nlp_and_grad, u, theta_d):
    """Evaluate the target; non-finite forward models count as +inf density."""
    try:
        nlp, grad = nlp_and_grad(u, theta_d)
        if not math.isfinite(nlp):
            return math.inf, None
        return nlp, grad
    except NonFiniteForwardError:
        return math.inf, None


def tune_step_size(nlp_and_grad, u, theta_d, precond, rng,
                   target_band=(0.4, 0.7), pilot_len: int = 60,
                   max_rounds: int = 18, tau0: float = 0.1):
    """Doubling/halving search for a step size inside the acceptance band.

    The pilot chain state persists across rounds so tuning happens in the
    typical set rather than at the (often far-tail) initial point; the
    search stops once a round's acceptance lands in the band after a
    previous round already did (one confirmation round).
    """
    tau = tau0
    uu, nn, gg = u.copy(), *(_safe_eval(nlp_and_grad, u, theta_d))
    if gg is None:
        raise RuntimeError("step-size tuning started from a non-finite state")
    in_band_once = False
    for _ in range(max_rounds):
        accepted = 0
        for _ in range(pilot_len):
            m = precond.diag()
            u_new, log_q_fwd, _ = mala_propose(uu, gg, tau, m, rng)
            nlp_new, grad_new = _safe_eval(nlp_and_grad, u_new, theta_d)
            if grad_new is None:
                continue
            log_q_rev = mala_log_q(u_new, grad_new, uu, tau, m)
            if mh_accept(nlp_new, nn, log_q_rev - log_q_fwd, rng):
                uu, nn, gg = u_new, nlp_new, grad_new
                precond.update(gg)  # keep tuning-time and chain-time scaling aligned
                accepted += 1
        rate = accepted / pilot_len
        if rate > target_band[1]:
            tau *= 2.0
            in_band_once = False
        elif rate < target_band[0]:
            tau *= 0.5
            in_band_once = False
        elif in_band_once:
            break
        else:
            in_band_once = True
    return tau


def sample_posterior(cfg: SamplerConfig, nlp_and_grad, init_u: np.ndarray,
                     discrete_spec=(), init_theta_d=None,
                     to_bounded=None, on_sample=None) -> ChainResult:
    """Run the mixed MALA/MH chain and return all samples (burn-in marked by
    the config, not deleted).

    `nlp_and_grad(u, theta_d)` returns the unconstrained-space negative log
    posterior and its gradient.  `to_bounded` maps u to the stored bounded
    theta_c (identity when omitted, for targets without bounds).
    `on_sample(sample)` is invoked as each sample is recorded, for
    incremental persistence.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    u = np.asarray(init_u, dtype=np.float64).copy()
    theta_d = (np.asarray(init_theta_d, dtype=np.int64).copy()
               if init_theta_d is not None else np.zeros(0, dtype=np.int64))
    if to_bounded is None:
        to_bounded = lambda x: x.copy()

    alpha = cfg.alpha if cfg.alpha is not None else (0.9 if len(discrete_spec) else 1.0)
    if not discrete_spec:
        alpha = 1.0

    nlp, grad = _safe_eval(nlp_and_grad, u, theta_d)
    if grad is None:
        raise RuntimeError("initial state has non-finite posterior")

    precond = Preconditioner(len(u), cfg.precond_decay, cfg.precond_eps)
    precond.update(grad)

    tau = cfg.tau if cfg.tau is not None else tune_step_size(
        nlp_and_grad, u, theta_d, precond, rng)

    freeze_after = cfg.freeze_after if cfg.freeze_after is not None else cfg.burn_in
    samples = [ChainSample(0, to_bounded(u), theta_d.copy(), nlp, True)]
    if on_sample is not None:
        on_sample(samples[0])
    acc_c = try_c = acc_d = try_d = 0
    consecutive_bad = 0
    aborted = None
    adapt_gain = 0.03  # Robbins-Monro refinement of tau, pre-freeze only
    target_acc = 0.57

    for t in range(1, cfg.n_samples):
        if t >= freeze_after:
            precond.frozen = True
        accepted = False
        if rng.uniform() < alpha:
            try_c += 1
            m = precond.diag()
            u_new, log_q_fwd, _ = mala_propose(u, grad, tau, m, rng)
            nlp_new, grad_new = _safe_eval(nlp_and_grad, u_new, theta_d)
            if grad_new is None:
                consecutive_bad += 1
            else:
                consecutive_bad = 0
                log_q_rev = mala_log_q(u_new, grad_new, u, tau, m)
                if mh_accept(nlp_new, nlp, log_q_rev - log_q_fwd, rng):
                    u, nlp, grad = u_new, nlp_new, grad_new
                    precond.update(grad)
                    accepted = True
                    acc_c += 1
            if cfg.tau is None and t < freeze_after:
                tau *= math.exp(adapt_gain * ((1.0 if accepted else 0.0) - target_acc))
        else:
            try_d += 1
            td_new = discrete_propose(theta_d, discrete_spec, rng)
            nlp_new, grad_new = _safe_eval(nlp_and_grad, u, td_new)
            if grad_new is None:
                consecutive_bad += 1
            else:
                consecutive_bad = 0
                if mh_accept(nlp_new, nlp, 0.0, rng):
                    theta_d, nlp, grad = td_new, nlp_new, grad_new
                    precond.update(grad)
                    accepted = True
                    acc_d += 1
        if consecutive_bad >= _MAX_CONSECUTIVE_BAD:
            aborted = (f"aborted at iteration {t}: {consecutive_bad} consecutive "
                       f"non-finite evaluations (last state nlp={nlp:.4g})")
            break
        sample = ChainSample(t, to_bounded(u), theta_d.copy(), nlp, accepted)
        samples.append(sample)
        if on_sample is not None:
            on_sample(sample)

    return ChainResult(
        samples=samples,
        tau=tau,
        accept_rate_continuous=acc_c / try_c if try_c else 0.0,
        accept_rate_discrete=acc_d / try_d if try_d else 0.0,
        config=cfg,
        aborted=aborted,
    )


@dataclass
class MapResult:
    u: np.ndarray
    nlp: float
    trace: list = field(default_factory=list)
    diverged: bool = False


def map_estimate(nlp_and_grad, init_u: np.ndarray, iters: int = 300,
                 theta_d=None, lr: float = 0.1,
                 decay: float = 0.99, eps: float = 1e-8) -> MapResult:
    """Preconditioned gradient descent on the negative log posterior.

    Backtracks the learning rate on uphill steps, so the best-seen trace is
    monotone non-increasing.  Returns the best-seen point; a divergence
    guard bails out early if the objective runs away for 100 consecutive
    steps.
    """
    theta_d = (np.asarray(theta_d, dtype=np.int64)
               if theta_d is not None else np.zeros(0, dtype=np.int64))
    u = np.asarray(init_u, dtype=np.float64).copy()
    nlp, grad = _safe_eval(nlp_and_grad, u, theta_d)
    if grad is None:
        raise RuntimeError("MAP estimation started from a non-finite state")
    precond = Preconditioner(len(u), decay, eps)
    precond.update(grad)

    init_nlp = nlp
    runaway_level = init_nlp * 10.0 if init_nlp > 0 else init_nlp * 0.1
    best_u, best_nlp = u.copy(), nlp
    trace = [best_nlp]
    runaway = 0

    for _ in range(iters):
        step = lr * precond.diag() * grad
        u_new = u - step
        nlp_new, grad_new = _safe_eval(nlp_and_grad, u_new, theta_d)
        if grad_new is None or nlp_new > nlp:
            lr *= 0.5
            if lr < 1e-12:
                break
        else:
            u, nlp, grad = u_new, nlp_new, grad_new
            precond.update(grad)
            lr *= 1.05
            if nlp < best_nlp:
                best_u, best_nlp = u.copy(), nlp
        trace.append(best_nlp)
        runaway = runaway + 1 if nlp > runaway_level else 0
        if runaway >= 100:
            return MapResult(best_u, best_nlp, trace, diverged=True)

    return MapResult(best_u, best_nlp, trace)
