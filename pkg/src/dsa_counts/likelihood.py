"""Survival-analytic likelihoods under the large-population approximation.

Every likelihood here is built from the ODE survival curve ``s_t`` of the
chosen variant. With infection counts ``Y_j`` on intervals
``(X_{j-1}, X_j]`` and ``N`` initial susceptibles, the within-interval
infection times integrate out exactly and leave::

    log L = (N - K) log s_T + sum_j Y_j log(s_{X_{j-1}} - s_{X_j})

All functions return natural-log values; ``-inf`` marks a zero-probability
configuration and ``+inf``/``nan`` are never returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from .dynamics import (
    GridSpec,
    ModelParams,
    Trajectory,
    Variant,
    eval_infected,
    eval_survival,
    infection_flux,
    solve,
    survival_at,
)
from .errors import DegenerateError, DomainError, UnsupportedError
from .simulate import CountData, EventRecord

__all__ = [
    "FinalSize",
    "density_infection",
    "cdf_infection",
    "density_recovery",
    "solve_tau",
    "loglik_complete",
    "loglik_infection_times",
    "loglik_counts",
    "loglik_counts_interval_censored",
    "count_loglik_from_survival",
    "estimate_population",
    "transformed_uniforms",
]


@dataclass(frozen=True)
class FinalSize:
    """Probability ``tau`` that an initial susceptible is ever infected."""

    tau: float
    R0: float
    rho: float

    @property
    def s_inf(self) -> float:
        return 1.0 - self.tau

    @property
    def r_inf(self) -> float:
        return self.rho + self.tau


def _finite_or_neg_inf(value: float) -> float:
    value = float(value)
    if math.isnan(value) or value == math.inf:
        return -math.inf
    return value


def density_infection(traj: Trajectory, t, T: float):
    """Density of the infection time conditioned on infection by ``T``.

    ``-s'(t) / (1 - s_T)``, with ``s'`` taken from the variant's drift.
    """
    if T > traj.t_end:
        raise DomainError("T beyond the trajectory horizon")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > T) or np.any(t_arr < 0):
        raise DomainError("t outside [0, T]")
    mass = 1.0 - eval_survival(traj, T)
    if mass <= 0:
        raise DegenerateError("no infection mass before T (s_T = 1)")
    return infection_flux(traj, t) / mass


def cdf_infection(traj: Trajectory, t, T: float):
    """``(1 - s_t) / (1 - s_T)``."""
    mass = 1.0 - eval_survival(traj, T)
    if mass <= 0:
        raise DegenerateError("no infection mass before T (s_T = 1)")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > T):
        raise DomainError("t beyond T")
    return (1.0 - eval_survival(traj, t)) / mass


def density_recovery(traj: Trajectory, t, tau: float | None = None):
    """Density of the recovery time of an eventually infected individual.

    ``(gamma / tau) (iota_t - rho exp(-gamma t))``; ``tau`` defaults to the
    final size of the standard model.
    """
    p = traj.params
    if tau is None:
        if p.variant is not Variant.STANDARD:
            raise UnsupportedError("pass tau explicitly for non-standard variants")
        tau = solve_tau(p.R0, p.rho).tau
    if not tau > 0:
        raise DegenerateError("final size tau must be positive")
    t_arr = np.asarray(t, dtype=float)
    return (p.gamma / tau) * (eval_infected(traj, t_arr) - p.rho * np.exp(-p.gamma * t_arr))


def _final_size_gap(tau, R0, rho):
    return 1.0 - tau - math.exp(-R0 * (rho + tau))


def solve_tau(R0: float, rho: float) -> FinalSize:
    """Root of ``1 - tau = exp(-R0 (rho + tau))`` in ``(0, 1)``.

    The gap function is concave, positive at 0 and negative at 1, so the root
    is unique.
    """
    if not R0 > 0:
        raise DomainError(f"R0 must be positive, got {R0}")
    if not 0 < rho < 1:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if _final_size_gap(0.0, R0, rho) <= 0:
        return FinalSize(0.0, R0, rho)
    tau = brentq(_final_size_gap, 0.0, 1.0, args=(R0, rho), xtol=1e-16, rtol=4 * np.finfo(float).eps,
                 maxiter=500)
    return FinalSize(float(tau), R0, rho)


def _solve_to(params, T, grid=None, knots=None) -> Trajectory:
    grid = grid or GridSpec.default(T)
    if grid.t_end != T:
        raise DomainError("grid must end at the observation horizon T")
    return solve(params, grid, knots=knots)


def loglik_complete(params: ModelParams, events: EventRecord, grid: GridSpec | None = None,
                    traj: Trajectory | None = None) -> float:
    """Log-likelihood of exact infection and recovery histories.

    ``(N-K) log s_T + (L + L~) log gamma - gamma (sum w + sum eps + (M - L~) T)
    + sum_i log(-s'(t_i))`` where ``L`` counts infections recovering by ``T``.
    """
    if params.variant is Variant.POISSON_NETWORK:
        raise UnsupportedError("complete-data likelihood is defined for the standard and frailty variants")
    if events.K and events.infection_times[-1] > events.T:
        raise DomainError("infection time beyond T")
    traj = traj or _solve_to(params, events.T, grid)
    s_T = eval_survival(traj, events.T)
    gamma = params.gamma
    exposure = events.infectious_periods.sum() + events.initial_recoveries.sum() \
        + (events.M - events.L_initial) * events.T
    value = xlogy(events.N - events.K, s_T) + (events.L + events.L_initial) * math.log(gamma) - gamma * exposure
    if events.K:
        with np.errstate(divide="ignore"):
            value += np.log(np.atleast_1d(infection_flux(traj, events.infection_times))).sum()
    return _finite_or_neg_inf(value)


def loglik_infection_times(params: ModelParams, times, T: float, N: int | None = None,
                           grid: GridSpec | None = None, traj: Trajectory | None = None) -> float:
    """Log-likelihood of exact infection times, recoveries unobserved.

    Without ``N``: ``sum log(-s'(t_i)) - K log(1 - s_T)``.
    With ``N``: ``(N - K) log s_T + sum log(-s'(t_i))``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    K = times.size
    if N is not None and K > N:
        raise DomainError(f"K={K} infection times exceed N={N}")
    if K and (times.min() <= 0 or times.max() > T):
        raise DomainError("infection times must lie in (0, T]")
    traj = traj or _solve_to(params, T, grid)
    s_T = eval_survival(traj, T)
    with np.errstate(divide="ignore"):
        flux_term = np.log(np.atleast_1d(infection_flux(traj, times))).sum() if K else 0.0
    if N is None:
        if K and s_T >= 1.0:
            return -math.inf
        value = flux_term - K * math.log1p(-s_T) if K else 0.0
    else:
        value = xlogy(N - K, s_T) + flux_term
    return _finite_or_neg_inf(value)


def _log_survival_drops(s: np.ndarray) -> np.ndarray:
    """``log(s[j-1] - s[j])`` computed as ``log s[j-1] + log1p(-s[j]/s[j-1])`` in log space."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ls = np.log(s)
        prev, nxt = ls[:-1], ls[1:]
        out = prev + np.log1p(-np.exp(nxt - prev))
    return np.where(np.isnan(out), -np.inf, out)


def count_loglik_from_survival(s_knots, counts, N) -> float:
    """Marginal count log-likelihood from the survival curve at the schedule.

    ``N`` may be non-integer (plug-in population estimates).
    """
    s_knots = np.asarray(s_knots, dtype=float)
    counts = np.asarray(counts)
    K = counts.sum()
    drops = _log_survival_drops(s_knots)
    hit = counts > 0
    value = xlogy(N - K, s_knots[-1]) + float(np.dot(counts[hit], drops[hit]))
    return _finite_or_neg_inf(value)


def _require_n(data: CountData):
    if data.N is None:
        raise UnsupportedError(
            "the count likelihood conditions on the number of initial susceptibles N; "
            "supply N or use the exact-times likelihood, which does not need it"
        )


def loglik_counts(params: ModelParams, data: CountData, grid: GridSpec | None = None,
                  traj: Trajectory | None = None) -> float:
    """Marginal log-likelihood of interval infection counts.

    The ODE grid passes through every observation time, so no interpolation
    error enters unless a precomputed ``traj`` is supplied.
    """
    _require_n(data)
    if traj is not None:
        s_knots = eval_survival(traj, data.schedule)
    else:
        grid = grid or GridSpec.default(data.T)
        s_knots = survival_at(params, data.schedule, grid)
    return count_loglik_from_survival(s_knots, data.counts, data.N)


def loglik_counts_interval_censored(params: ModelParams, data: CountData, traj: Trajectory | None = None,
                                    grid: GridSpec | None = None) -> float:
    """Same likelihood written as an interval-censored survival likelihood.

    ``sum_j Y_j log P(X_{j-1} < T_I <= X_j) + (N - K) log P(T_I > T)``.
    """
    _require_n(data)
    traj = traj or _solve_to(params, data.T, grid, knots=data.schedule)
    surv = eval_survival(traj, data.schedule)
    with np.errstate(divide="ignore", invalid="ignore"):
        interval_prob = surv[:-1] - surv[1:]
        value = xlogy(data.N - data.K, surv[-1])
        for y, p in zip(data.counts, interval_prob):
            if y:
                value += y * math.log(p) if p > 0 else -math.inf
    return _finite_or_neg_inf(value)


def estimate_population(data: CountData, traj: Trajectory) -> int:
    """Plug-in estimate ``K / (1 - s_T)`` of the initial susceptible count."""
    if data.K == 0:
        return 0
    s_T = eval_survival(traj, data.T)
    if s_T >= 1.0:
        raise DegenerateError("s_T = 1: no infection mass, population not identifiable")
    return int(round(data.K / (1.0 - s_T)))


def transformed_uniforms(traj: Trajectory, schedule, times) -> np.ndarray:
    """Map infection times to ``(s_t - s_{X_{j-1}}) / (s_{X_j} - s_{X_{j-1}})``.

    Under the model these are i.i.d. uniform on (0, 1) given the counts.
    """
    schedule = np.asarray(schedule, dtype=float)
    times = np.asarray(times, dtype=float)
    j = np.clip(np.searchsorted(schedule, times, side="left"), 1, schedule.size - 1)
    s_lo = eval_survival(traj, schedule[j - 1])
    s_hi = eval_survival(traj, schedule[j])
    return (eval_survival(traj, times) - s_lo) / (s_hi - s_lo)
