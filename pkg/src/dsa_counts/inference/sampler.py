"""Adaptive random-walk Metropolis on an unconstrained parametrisation.

Positive parameters are sampled on the log scale and interval-bounded ones
on the logit scale; the log-Jacobian of the back-transform is added to the
target. During burn-in the global proposal scale follows a Robbins-Monro
recursion towards an acceptance rate of 0.234 and the proposal covariance is
re-estimated from the recent history, diagonal first and full later. Both
are frozen once burn-in ends, so retained draws come from a fixed
Metropolis kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import SamplerError
from .priors import log_jacobian, to_constrained, to_unconstrained

__all__ = ["SamplerConfig", "Chain", "run_chain"]

TARGET_ACCEPT = 0.234


@dataclass(frozen=True)
class SamplerConfig:
    n_draws: int = 20_000
    burn_in: int | None = None  # default: half of n_draws
    seed: int = 0
    adapt_window: int = 100
    target_accept: float = TARGET_ACCEPT

    def __post_init__(self):
        if self.n_draws < 2:
            raise SamplerError("n_draws must be at least 2")
        if self.burn_in is not None and not 0 <= self.burn_in < self.n_draws:
            raise SamplerError("burn_in must lie in [0, n_draws)")
        if self.adapt_window < 1:
            raise SamplerError("adapt_window must be positive")

    @property
    def n_burn(self) -> int:
        return self.n_draws // 2 if self.burn_in is None else self.burn_in


@dataclass(eq=False)
class Chain:
    """All draws of one chain; ``retained`` drops the burn-in prefix."""

    names: tuple[str, ...]
    draws: np.ndarray
    unconstrained: np.ndarray
    log_post: np.ndarray
    accepted: int
    accepted_retained: int
    seed: int
    burn_in: int
    wall_time: float = 0.0
    proposal_cov: np.ndarray | None = field(default=None, repr=False)

    @property
    def retained(self) -> np.ndarray:
        return self.draws[self.burn_in:]

    @property
    def n_retained(self) -> int:
        return self.draws.shape[0] - self.burn_in

    @property
    def acceptance_rate(self) -> float:
        """Acceptance rate of the frozen kernel (all draws if no burn-in)."""
        return self.accepted_retained / max(self.n_retained, 1)

    def column(self, name: str) -> np.ndarray:
        return self.retained[:, self.names.index(name)]


def _cholesky(cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    jitter = 1e-12 * max(np.trace(cov) / d, 1e-12)
    for _ in range(8):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            jitter *= 100
    return np.diag(np.sqrt(np.maximum(np.diag(cov), 1e-12)))


def run_chain(log_target, init, config: SamplerConfig, bounds=None, names=None, init_cov=None) -> Chain:
    """Sample ``log_target`` (a function of the constrained parameter vector).

    Parameters
    ----------
    log_target : callable
        Log posterior density, up to a constant, of the constrained vector.
    init : array_like
        Starting point; the target must be finite there.
    bounds : sequence of (lower, upper), optional
        Support of each coordinate. ``None`` means unbounded everywhere.
    init_cov : ndarray, optional
        Initial proposal shape on the unconstrained scale (e.g. an inverse
        Hessian at the mode). Defaults to ``0.1**2 * I``.
    """
    x0 = np.atleast_1d(np.asarray(init, dtype=float))
    d = x0.size
    bounds = [(-math.inf, math.inf)] * d if bounds is None else list(bounds)
    names = tuple(names) if names is not None else tuple(f"x{k}" for k in range(d))
    n, n_burn, window = config.n_draws, config.n_burn, config.adapt_window

    def unconstrained_target(z):
        x = to_constrained(z, bounds)
        lp = log_target(x)
        if not np.isfinite(lp):
            return -math.inf, lp, x
        return lp + log_jacobian(z, bounds), lp, x

    z = to_unconstrained(x0, bounds)
    cur, cur_lp, x = unconstrained_target(z)
    if not np.isfinite(cur):
        raise SamplerError("log target is not finite at the initial point; choose another init")

    base_cov = np.eye(d) * 0.01 if init_cov is None else np.array(init_cov, dtype=float)
    scale = 2.38**2 / d
    chol = _cholesky(scale * base_cov)
    log_lambda = 0.0

    rng = np.random.default_rng(config.seed)
    noise = rng.standard_normal((n, d))
    log_u = np.log(rng.random(n))

    draws = np.empty((n, d))
    zs = np.empty((n, d))
    lps = np.empty(n)
    accepted = accepted_retained = window_accepts = 0
    full_after = n_burn // 2
    started = time.perf_counter()

    for it in range(n):
        prop = z + math.exp(log_lambda) * (chol @ noise[it])
        new, new_lp, new_x = unconstrained_target(prop)
        log_alpha = new - cur if np.isfinite(new) else -math.inf
        accept = log_u[it] < log_alpha
        if accept:
            z, cur, cur_lp, x = prop, new, new_lp, new_x
            accepted += 1
            window_accepts += 1
            if it >= n_burn:
                accepted_retained += 1
        draws[it], zs[it], lps[it] = x, z, cur_lp

        if it < n_burn:
            alpha = math.exp(min(log_alpha, 0.0))
            log_lambda += (alpha - config.target_accept) / (1.0 + it / window) ** 0.6
            if (it + 1) % window == 0:
                if window_accepts == 0:
                    raise SamplerError(
                        f"no proposal accepted in iterations {it + 2 - window}..{it + 1}; "
                        "re-initialise closer to the posterior mode"
                    )
                window_accepts = 0
                if it + 1 >= 2 * window:
                    recent = zs[(it + 1) // 2: it + 1]
                    emp = np.atleast_2d(np.cov(recent, rowvar=False))
                    if np.all(np.isfinite(emp)) and np.trace(emp) > 0:
                        if it + 1 < full_after:
                            emp = np.diag(np.diag(emp))
                        base_cov = emp
                        chol = _cholesky(scale * base_cov)

    elapsed = time.perf_counter() - started
    return Chain(names, draws, zs, lps, accepted, accepted_retained, int(config.seed), n_burn, elapsed,
                 math.exp(2 * log_lambda) * scale * base_cov)
