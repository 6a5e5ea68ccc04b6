"""Epidemic data generators and count aggregation.

Exact draws come from Sellke's construction: every initial susceptible
carries an exposure threshold ``Q_i`` and becomes infected when the
cumulative exposure ``(beta / N) * int_0^t I(u) du`` crosses it. The
approximate (DSA) generator instead draws infection times i.i.d. from the
ODE survival curve conditioned on infection before ``T``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GridSpec, ModelParams, Trajectory, Variant, eval_survival, invert_survival, solve
from .errors import DomainError

__all__ = [
    "EventRecord",
    "CountData",
    "make_rng",
    "derive_rng",
    "draw_frailties",
    "sellke_simulate",
    "sellke_simulate_frailty",
    "sample_infection_time",
    "simulate_dsa_events",
    "simulate_dsa_counts",
    "aggregate_counts",
]


def _frozen(arr, dtype=float):
    arr = np.array(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventRecord:
    """Individual-level infection and recovery information up to ``T``.

    ``infectious_periods[i]`` is the observed infectious period of the i-th
    infection when ``censored[i]`` is False, and the tail ``T - t_i``
    otherwise. ``initial_recoveries`` lists the durations of the initially
    infected who recover by ``T``; the remaining ``M - len(...)`` are
    censored at ``T``.
    """

    infection_times: np.ndarray
    infectious_periods: np.ndarray
    censored: np.ndarray
    initial_recoveries: np.ndarray
    N: int
    M: int
    T: float

    def __post_init__(self):
        object.__setattr__(self, "infection_times", _frozen(self.infection_times))
        object.__setattr__(self, "infectious_periods", _frozen(self.infectious_periods))
        object.__setattr__(self, "censored", _frozen(self.censored, bool))
        object.__setattr__(self, "initial_recoveries", _frozen(self.initial_recoveries))
        t, w = self.infection_times, self.infectious_periods
        if not (t.shape == w.shape == self.censored.shape):
            raise DomainError("infection_times, infectious_periods and censored must align")
        if t.size > self.N:
            raise DomainError(f"K={t.size} infections exceed N={self.N}")
        if self.initial_recoveries.size > self.M:
            raise DomainError("more initial recoveries than initially infected")
        if np.any(np.diff(t) < 0):
            raise DomainError("infection_times must be sorted")
        if t.size and (t[0] < 0 or t[-1] > self.T):
            raise DomainError("infection time outside [0, T]")
        if np.any(self.initial_recoveries < 0) or np.any(self.initial_recoveries > self.T):
            raise DomainError("initial recovery duration outside [0, T]")
        tails = self.T - t
        if np.any(w < 0) or np.any(w > tails + 1e-9 * max(1.0, self.T)):
            raise DomainError("infectious period extends past T")
        if not np.allclose(w[self.censored], tails[self.censored], rtol=0, atol=1e-9 * max(1.0, self.T)):
            raise DomainError("censored periods must equal T - t_i")

    @property
    def K(self) -> int:
        return int(self.infection_times.size)

    @property
    def L(self) -> int:
        """Infected-by-T individuals who also recover by T."""
        return int(np.count_nonzero(~self.censored))

    @property
    def L_initial(self) -> int:
        return int(self.initial_recoveries.size)

    def __eq__(self, other):
        if not isinstance(other, EventRecord):
            return NotImplemented
        return (
            (self.N, self.M, self.T) == (other.N, other.M, other.T)
            and np.array_equal(self.infection_times, other.infection_times)
            and np.array_equal(self.infectious_periods, other.infectious_periods)
            and np.array_equal(self.censored, other.censored)
            and np.array_equal(self.initial_recoveries, other.initial_recoveries)
        )


@dataclass(frozen=True, eq=False)
class CountData:
    """Infection counts per observation interval ``(X_{j-1}, X_j]``.

    ``N`` is ``None`` when the number of initial susceptibles is unknown.
    """

    schedule: np.ndarray
    counts: np.ndarray
    N: int | None = None
    M: int | None = None

    def __post_init__(self):
        sched = _frozen(self.schedule)
        counts = np.asarray(self.counts)
        if counts.size and not np.all(np.equal(np.mod(counts, 1), 0)):
            raise DomainError("counts must be integers")
        counts = _frozen(counts, np.int64)
        object.__setattr__(self, "schedule", sched)
        object.__setattr__(self, "counts", counts)
        if sched.ndim != 1 or sched.size < 2:
            raise DomainError("schedule needs at least two observation times")
        if sched[0] != 0:
            raise DomainError("schedule must start at 0")
        if not np.all(np.isfinite(sched)) or np.any(np.diff(sched) <= 0):
            raise DomainError("schedule must be strictly increasing")
        if counts.shape != (sched.size - 1,):
            raise DomainError(f"expected {sched.size - 1} counts, got {counts.size}")
        if np.any(counts < 0):
            raise DomainError("counts must be non-negative")
        if self.N is not None:
            object.__setattr__(self, "N", int(self.N))
            if self.K > self.N:
                raise DomainError(f"total count K={self.K} exceeds N={self.N}")
        if self.M is not None:
            object.__setattr__(self, "M", int(self.M))

    @property
    def K(self) -> int:
        return int(self.counts.sum())

    @property
    def T(self) -> float:
        return float(self.schedule[-1])

    @property
    def P(self) -> int:
        return int(self.counts.size)

    def __eq__(self, other):
        if not isinstance(other, CountData):
            return NotImplemented
        return (
            (self.N, self.M) == (other.N, other.M)
            and np.array_equal(self.schedule, other.schedule)
            and np.array_equal(self.counts, other.counts)
        )


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replicate ``index`` under master ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def draw_frailties(nu: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma frailties with mean 1 and variance ``nu**2``; ``nu = 0`` gives ones."""
    if nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu}")
    if nu == 0:
        return np.ones(size)
    return rng.gamma(1.0 / nu**2, nu**2, size=size)


def _check_sizes(N, M, T):
    if N < 1 or M < 1 or int(N) != N or int(M) != M:
        raise DomainError("N and M must be positive integers")
    if not T > 0:
        raise DomainError("T must be positive")


def _sellke(thresholds, params: ModelParams, N, M, T, rng) -> EventRecord:
    """Event-driven Sellke epidemic given sorted exposure thresholds."""
    gamma, beta = params.gamma, params.beta
    initial = rng.exponential(1.0 / gamma, size=M)
    durations = rng.exponential(1.0 / gamma, size=N)
    recoveries = initial.tolist()
    heapq.heapify(recoveries)
    q = thresholds.tolist()
    rate_per_infective = beta / N
    t, exposure, n_inf, k = 0.0, 0.0, M, 0
    times = []
    while n_inf > 0:
        next_rec = recoveries[0]
        if k < N and rate_per_infective > 0:
            t_inf = t + (q[k] - exposure) / (rate_per_infective * n_inf)
        else:
            t_inf = math.inf
        if t_inf <= next_rec:
            if t_inf > T:
                break
            t, exposure = t_inf, q[k]
            times.append(t)
            heapq.heappush(recoveries, t + durations[k])
            k += 1
            n_inf += 1
        else:
            if next_rec > T:
                break
            exposure += rate_per_infective * n_inf * (next_rec - t)
            t = next_rec
            heapq.heappop(recoveries)
            n_inf -= 1
    infection_times = np.array(times)
    d = durations[:k]
    tails = T - infection_times
    censored = d > tails
    periods = np.where(censored, tails, d)
    return EventRecord(infection_times, periods, censored, np.sort(initial[initial <= T]), N, M, T)


def sellke_simulate(params: ModelParams, N: int, M: int, T: float, rng: np.random.Generator) -> EventRecord:
    """Exact stochastic SIR epidemic via Sellke's construction."""
    if params.variant is not Variant.STANDARD:
        raise DomainError("sellke_simulate needs the standard variant; use sellke_simulate_frailty")
    _check_sizes(N, M, T)
    thresholds = np.sort(rng.exponential(1.0, size=N))
    return _sellke(thresholds, params, N, M, T, rng)


def sellke_simulate_frailty(params: ModelParams, N: int, M: int, T: float, rng: np.random.Generator) -> EventRecord:
    """Sellke epidemic with thresholds ``Q_i ~ Exp(rate=X_i)``, ``X_i`` Gamma frailties."""
    if params.variant not in (Variant.GAMMA_FRAILTY, Variant.STANDARD):
        raise DomainError("frailty simulation needs the frailty variant")
    _check_sizes(N, M, T)
    base = rng.exponential(1.0, size=N)
    frailty = draw_frailties(params.nu, N, rng)
    thresholds = np.sort(base / frailty)
    return _sellke(thresholds, params, N, M, T, rng)


def sample_infection_time(traj: Trajectory, T: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draw(s) from the infection-time density conditioned on ``T_I <= T``."""
    s_T = eval_survival(traj, T)
    u = rng.random(size)
    target = np.maximum(1.0 - u * (1.0 - s_T), s_T)
    return invert_survival(traj, target)


def simulate_dsa_events(params: ModelParams, N: int, M: int, T: float, rng: np.random.Generator,
                        traj: Trajectory | None = None) -> EventRecord:
    """Approximate epidemic: ``K ~ Bin(N, 1 - s_T)`` i.i.d. infection times.

    Infectious periods are independent ``Exp(gamma)`` draws, censored at ``T``.
    """
    _check_sizes(N, M, T)
    if traj is None:
        traj = solve(params, GridSpec.default(T))
    s_T = eval_survival(traj, T)
    K = int(rng.binomial(N, 1.0 - s_T))
    times = np.sort(np.atleast_1d(sample_infection_time(traj, T, rng, size=K))) if K else np.empty(0)
    durations = rng.exponential(1.0 / params.gamma, size=K)
    initial = rng.exponential(1.0 / params.gamma, size=M)
    tails = T - times
    censored = durations > tails
    periods = np.where(censored, tails, durations)
    return EventRecord(times, periods, censored, np.sort(initial[initial <= T]), N, M, T)


def simulate_dsa_counts(params: ModelParams, N: int, M: int, T: float, schedule, rng: np.random.Generator,
                        traj: Trajectory | None = None) -> CountData:
    return aggregate_counts(simulate_dsa_events(params, N, M, T, rng, traj=traj), schedule)


def aggregate_counts(events: EventRecord, schedule) -> CountData:
    """Counts per right-closed interval ``(X_{j-1}, X_j]``; ``t = 0`` falls in the first."""
    sched = np.asarray(schedule, dtype=float)
    if sched.ndim != 1 or sched.size < 2 or sched[0] != 0:
        raise DomainError("schedule must start at 0 and contain at least two times")
    times = events.infection_times
    if times.size and times[-1] > sched[-1]:
        raise DomainError("schedule does not span all infection times")
    j = np.clip(np.searchsorted(sched, times, side="left"), 1, sched.size - 1)
    counts = np.bincount(j - 1, minlength=sched.size - 1)
    return CountData(sched, counts, events.N, events.M)
