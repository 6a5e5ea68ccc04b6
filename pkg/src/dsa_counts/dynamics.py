"""Large-population ODE limits of the stochastic SIR family.

Three variants share one fixed-step RK4 integrator:

* ``STANDARD``: ``s' = -beta s i``, ``i' = beta s i - gamma i``, ``r' = gamma i``.
* ``GAMMA_FRAILTY``: as above with ``s`` replaced by ``s**(1 + nu**2)`` in the
  infection flux (Gamma frailty with mean 1 and standard deviation ``nu``).
* ``POISSON_NETWORK``: ``S' = -bt S (1 + rho - S + (gt / bt) log S)``,
  ``I' = -S' - gt I`` and ``R = 1 + rho - S - I``, where ``bt = mu * beta`` and
  ``gt = beta + gamma`` are stored in the ``beta`` and ``gamma`` fields.

All variants start from ``s = 1``, ``i = rho``, ``r = 0``. The susceptible
curve ``s`` doubles as the survival function of the time to infection of a
randomly chosen initial susceptible.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DomainError, IntegrationError

__all__ = [
    "Variant",
    "ModelParams",
    "GridSpec",
    "Trajectory",
    "make_grid",
    "solve",
    "eval_survival",
    "eval_infected",
    "infection_flux",
    "invert_survival",
    "survival_at",
]

LOG_GUARD = 1e-12
CLAMP_TOL = 1e-12
DEFAULT_MAX_STEP = 0.005
DEFAULT_MIN_STEPS = 2000


class Variant(str, enum.Enum):
    STANDARD = "standard"
    GAMMA_FRAILTY = "frailty"
    POISSON_NETWORK = "network"

    @property
    def code(self) -> int:
        return _VARIANT_CODES[self]


_VARIANT_CODES = {Variant.STANDARD: 0, Variant.GAMMA_FRAILTY: 1, Variant.POISSON_NETWORK: 2}


@dataclass(frozen=True)
class ModelParams:
    """Epidemic parameters for one model variant.

    For ``POISSON_NETWORK`` the ``beta`` and ``gamma`` fields hold the
    identifiable composites ``mu * beta`` and ``beta + gamma``.
    """

    beta: float
    gamma: float
    rho: float
    nu: float = 0.0
    variant: Variant = Variant.STANDARD

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("beta", "gamma", "rho", "nu"):
            object.__setattr__(self, name, float(getattr(self, name)))
        # beta = 0 is admitted so simulators can produce the no-transmission edge case.
        if not self.beta >= 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if not 0 < self.rho < 1:
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.nu >= 0:
            raise DomainError(f"nu must be >= 0, got {self.nu}")
        if self.variant is not Variant.GAMMA_FRAILTY and self.nu != 0:
            raise DomainError("nu is only meaningful for the frailty variant")

    @property
    def R0(self) -> float:
        return self.beta / self.gamma

    @property
    def names(self) -> tuple[str, ...]:
        return parameter_names(self.variant)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.names}

    def replace(self, **changes) -> ModelParams:
        values = {"beta": self.beta, "gamma": self.gamma, "rho": self.rho, "nu": self.nu,
                  "variant": self.variant}
        values.update(changes)
        return ModelParams(**values)


def parameter_names(variant) -> tuple[str, ...]:
    if Variant(variant) is Variant.GAMMA_FRAILTY:
        return ("beta", "gamma", "rho", "nu")
    return ("beta", "gamma", "rho")


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid on ``[0, t_end]`` with ``n_steps`` steps."""

    t_end: float
    n_steps: int = DEFAULT_MIN_STEPS

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError(f"t_end must be positive and finite, got {self.t_end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 100:
            raise DomainError(f"n_steps must be an integer >= 100, got {self.n_steps}")

    @classmethod
    def default(cls, t_end: float) -> GridSpec:
        return cls(t_end, max(DEFAULT_MIN_STEPS, math.ceil(t_end / DEFAULT_MAX_STEP)))

    @property
    def h(self) -> float:
        return self.t_end / self.n_steps


def make_grid(grid: GridSpec, knots=None) -> np.ndarray:
    """Grid times for ``grid``, forced to pass through every knot.

    Without knots this is ``linspace(0, t_end, n_steps + 1)``. With knots the
    grid is uniform inside each knot interval, with a step no larger than
    ``grid.h``.
    """
    if knots is None:
        return np.linspace(0.0, grid.t_end, grid.n_steps + 1)
    knots = np.asarray(knots, dtype=float)
    if knots.size and (knots.min() < 0 or knots.max() > grid.t_end):
        raise DomainError("knots must lie inside [0, t_end]")
    breaks = np.unique(np.concatenate([[0.0, grid.t_end], knots]))
    pieces = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((b - a) / grid.h - 1e-9))
        seg = np.linspace(a, b, n + 1)[1:]
        seg[-1] = b
        pieces.append(seg)
    return np.concatenate(pieces)


@numba.njit(cache=True)
def _drift(code, beta, gamma, rho, expo, s, i):
    if code == 2:
        ds = -beta * s * (1.0 + rho - s + (gamma / beta) * math.log(max(s, LOG_GUARD))) if beta > 0 else 0.0
        return ds, -ds - gamma * i, gamma * i
    if code == 1:
        flux = beta * s ** expo * i
    else:
        flux = beta * s * i
    return -flux, flux - gamma * i, gamma * i


@numba.njit(cache=True)
def _rk4(code, beta, gamma, rho, expo, times):
    n = times.shape[0]
    out = np.empty((n, 3))
    s, i, r = 1.0, rho, 0.0
    out[0, 0], out[0, 1], out[0, 2] = s, i, r
    for k in range(n - 1):
        h = times[k + 1] - times[k]
        a1, b1, c1 = _drift(code, beta, gamma, rho, expo, s, i)
        a2, b2, c2 = _drift(code, beta, gamma, rho, expo, s + 0.5 * h * a1, i + 0.5 * h * b1)
        a3, b3, c3 = _drift(code, beta, gamma, rho, expo, s + 0.5 * h * a2, i + 0.5 * h * b2)
        a4, b4, c4 = _drift(code, beta, gamma, rho, expo, s + h * a3, i + h * b3)
        s = s + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        i = i + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        r = r + h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        if not (math.isfinite(s) and math.isfinite(i) and math.isfinite(r)):
            out[k + 1, 0] = np.nan
            return out, k + 1
        if i < 0.0 and i > -CLAMP_TOL:
            i = 0.0
        if s < 0.0 and s > -CLAMP_TOL:
            s = 0.0
        out[k + 1, 0], out[k + 1, 1], out[k + 1, 2] = s, i, r
    return out, -1


@numba.njit(cache=True)
def _drift_s(code, beta, gamma, rho, expo, s, i):
    out = np.empty(s.shape[0])
    for k in range(s.shape[0]):
        out[k] = _drift(code, beta, gamma, rho, expo, s[k], i[k])[0]
    return out


def _params_tuple(params: ModelParams):
    return params.variant.code, params.beta, params.gamma, params.rho, 1.0 + params.nu**2


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Numerical solution on a (possibly knot-aligned) grid.

    ``s``, ``iota`` and ``r`` hold the susceptible, infected and removed
    fractions; for the network variant they hold ``S``, ``I`` and ``R``.
    ``dsdt`` is the exact drift of ``s`` at each grid point, used for the
    Hermite interpolation of the survival curve.
    """

    times: np.ndarray
    s: np.ndarray
    iota: np.ndarray
    r: np.ndarray
    params: ModelParams
    dsdt: np.ndarray = field(repr=False)
    _cubic: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("times", "s", "iota", "r", "dsdt"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_cubic", _monotone_segments(self.times, self.s, self.dsdt))

    @property
    def variant(self) -> Variant:
        return self.params.variant

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def s_end(self) -> float:
        return float(self.s[-1])


def _monotone_segments(t, s, m):
    # Fritsch-Carlson condition on each segment; False -> linear fallback.
    h = np.diff(t)
    delta = np.diff(s) / h
    m0, m1 = m[:-1], m[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(delta != 0, m0 / delta, np.inf)
        b = np.where(delta != 0, m1 / delta, np.inf)
    flat = (delta == 0) & (m0 == 0) & (m1 == 0)
    ok = (a >= 0) & (b >= 0) & (a * a + b * b <= 9.0)
    return ok | flat


def solve(params: ModelParams, grid: GridSpec, knots=None) -> Trajectory:
    """Integrate the limiting ODE of ``params.variant`` with classical RK4.

    ``knots`` (e.g. observation times) are forced onto the grid so that the
    solution is exact-to-integrator at those points.
    """
    times = make_grid(grid, knots)
    code, beta, gamma, rho, expo = _params_tuple(params)
    states, fail = _rk4(code, beta, gamma, rho, expo, times)
    if fail >= 0:
        raise IntegrationError("non-finite state during integration", float(times[fail]))
    s, iota = states[:, 0], states[:, 1]
    if params.variant is Variant.POISSON_NETWORK:
        r = 1.0 + rho - s - iota
    else:
        r = states[:, 2]
    dsdt = _drift_s(code, beta, gamma, rho, expo, s, iota)
    return Trajectory(times, s, iota, r, params, dsdt)


@functools.lru_cache(maxsize=64)
def _cached_grid(t_end, n_steps, knots):
    times = make_grid(GridSpec(t_end, n_steps), knots)
    times.setflags(write=False)
    index = np.searchsorted(times, np.asarray(knots, dtype=float)) if knots else np.empty(0, dtype=np.intp)
    return times, index


def survival_at(params: ModelParams, knots, grid: GridSpec | None = None) -> np.ndarray:
    """Survival curve at ``knots`` with every knot placed on the RK4 grid.

    Equivalent to ``solve(params, grid, knots).s`` sampled at the knots, without
    building a full :class:`Trajectory`; this is the likelihood hot path.
    """
    knots = tuple(float(x) for x in np.asarray(knots, dtype=float).ravel())
    if grid is None:
        grid = GridSpec.default(max(knots))
    times, index = _cached_grid(grid.t_end, grid.n_steps, knots)
    states, fail = _rk4(*_params_tuple(params), times)
    if fail >= 0:
        raise IntegrationError("non-finite state during integration", float(times[fail]))
    return states[index, 0]


def _locate(traj: Trajectory, t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > traj.times[-1]):
        raise DomainError(f"time outside [0, {traj.t_end}]")
    k = np.searchsorted(traj.times, t, side="right") - 1
    k = np.clip(k, 0, traj.times.size - 2)
    return t, k


def _hermite(traj, k, x):
    h = traj.times[k + 1] - traj.times[k]
    s0, s1 = traj.s[k], traj.s[k + 1]
    m0, m1 = traj.dsdt[k], traj.dsdt[k + 1]
    x2, x3 = x * x, x * x * x
    cubic = ((2 * x3 - 3 * x2 + 1) * s0 + (x3 - 2 * x2 + x) * h * m0
             + (-2 * x3 + 3 * x2) * s1 + (x3 - x2) * h * m1)
    linear = s0 + x * (s1 - s0)
    return np.where(traj._cubic[k], cubic, linear)


def eval_survival(traj: Trajectory, t):
    """Survival curve ``s`` at time(s) ``t``; exact at grid points."""
    t, k = _locate(traj, t)
    x = (t - traj.times[k]) / (traj.times[k + 1] - traj.times[k])
    out = _hermite(traj, k, x)
    out = np.where(x == 0, traj.s[k], np.where(x == 1, traj.s[k + 1], out))
    return float(out) if out.ndim == 0 else out


def eval_infected(traj: Trajectory, t):
    """Infected fraction at time(s) ``t`` by linear interpolation."""
    t = np.asarray(t, dtype=float)
    _locate(traj, t)
    out = np.interp(t, traj.times, traj.iota)
    return float(out) if out.ndim == 0 else out


def infection_flux(traj: Trajectory, t):
    """``-ds/dt`` at time(s) ``t`` from the variant's own drift.

    This is ``beta s iota`` for the standard model and the unnormalised
    density of the infection time in every variant.
    """
    s = np.atleast_1d(eval_survival(traj, t))
    i = np.atleast_1d(eval_infected(traj, t))
    code, beta, gamma, rho, expo = _params_tuple(traj.params)
    out = -_drift_s(code, beta, gamma, rho, expo, s.astype(float), i.astype(float))
    return float(out[0]) if np.ndim(t) == 0 else out


def invert_survival(traj: Trajectory, s_target):
    """Smallest time ``t`` with ``eval_survival(traj, t) == s_target``."""
    target = np.asarray(s_target, dtype=float)
    lo_s = traj.s[-1]
    if np.any(~np.isfinite(target)) or np.any(target > 1.0) or np.any(target < lo_s):
        raise DomainError(f"survival target outside [{lo_s}, 1]")
    flat_target = np.atleast_1d(target)
    k = np.searchsorted(-traj.s, -flat_target, side="left")
    k = np.minimum(k, traj.s.size - 1)
    hit = traj.s[k] == flat_target
    seg = np.maximum(k - 1, 0)
    s0, s1 = traj.s[seg], traj.s[seg + 1]
    # linear root, then bisection refinement where the segment is cubic
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.clip(np.where(s0 != s1, (s0 - flat_target) / (s0 - s1), 0.0), 0.0, 1.0)
    cubic = traj._cubic[seg] & ~hit
    if np.any(cubic):
        idx = np.nonzero(cubic)[0]
        ks, tgt = seg[idx], flat_target[idx]
        lo, hi = np.zeros(idx.size), np.ones(idx.size)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = _hermite(traj, ks, mid) > tgt
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        x[idx] = 0.5 * (lo + hi)
    t0, t1 = traj.times[seg], traj.times[seg + 1]
    out = np.where(hit, traj.times[k], t0 + x * (t1 - t0))
    return float(out[0]) if target.ndim == 0 else out
