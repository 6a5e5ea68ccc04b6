"""Bayesian fitting of the DSA likelihoods."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from ..dynamics import GridSpec, ModelParams, Variant, parameter_names, survival_at
from ..errors import ConfigError, DomainError, IntegrationError, SamplerError
from ..likelihood import (
    count_loglik_from_survival,
    loglik_complete,
    loglik_counts,
    loglik_infection_times,
)
from ..simulate import CountData, EventRecord
from .diagnostics import PosteriorSummary, summarize
from .priors import PriorSpec, log_jacobian, log_prior, to_constrained, to_unconstrained
from .sampler import Chain, SamplerConfig, run_chain

__all__ = ["SELECTORS", "FitSpec", "FitResult", "log_posterior", "make_target", "find_mode", "fit"]

# counts: marginal count likelihood (needs N); complete: exact infection and
# recovery histories; times / times_n: exact infection times without / with N.
SELECTORS = ("counts", "complete", "times", "times_n")


@dataclass(frozen=True)
class FitSpec:
    """What to sample and how.

    ``fixed`` holds parameters pinned to known values (e.g. ``gamma = 1/6``);
    they are excluded from the sampled set. ``estimate_n`` replaces an unknown
    ``N`` by the plug-in ``K / (1 - s_T)`` at every parameter value.
    """

    variant: Variant = Variant.STANDARD
    priors: PriorSpec | None = None
    selector: str = "counts"
    fixed: dict = field(default_factory=dict)
    estimate_n: bool = False
    grid_steps: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.priors is None:
            object.__setattr__(self, "priors", PriorSpec.default(self.variant))
        if self.selector not in SELECTORS:
            raise ConfigError(f"unknown likelihood selector {self.selector!r}; expected one of {SELECTORS}")
        unknown = set(self.fixed) - set(parameter_names(self.variant))
        if unknown:
            raise ConfigError(f"cannot fix unknown parameters {sorted(unknown)}")
        if self.estimate_n and self.selector != "counts":
            raise ConfigError("estimate_n only applies to the count likelihood")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n in parameter_names(self.variant) if n not in self.fixed)

    def params_from(self, values) -> ModelParams:
        full = dict(self.fixed)
        full.update(zip(self.names, (float(v) for v in values)))
        return ModelParams(variant=self.variant, **full)


def _check_selector(selector, data):
    if selector == "counts" and not isinstance(data, CountData):
        raise ConfigError("the counts likelihood needs CountData")
    if selector != "counts" and not isinstance(data, EventRecord):
        raise ConfigError(f"the {selector!r} likelihood needs an EventRecord")


def log_likelihood(params: ModelParams, data, selector: str) -> float:
    _check_selector(selector, data)
    if selector == "counts":
        return loglik_counts(params, data)
    if selector == "complete":
        return loglik_complete(params, data)
    if selector == "times":
        return loglik_infection_times(params, data.infection_times, data.T)
    return loglik_infection_times(params, data.infection_times, data.T, N=data.N)


def log_posterior(priors: PriorSpec, data, params: ModelParams, selector: str = "counts") -> float:
    """Log prior plus the selected log-likelihood; ``-inf`` short-circuits."""
    _check_selector(selector, data)
    lp = log_prior(priors, params)
    if lp == -math.inf:
        return lp
    try:
        ll = log_likelihood(params, data, selector)
    except IntegrationError:
        return -math.inf
    return lp + ll


def make_target(spec: FitSpec, data):
    """Closure ``values -> log posterior`` over the sampled parameters."""
    _check_selector(spec.selector, data)
    if spec.selector == "counts" and data.N is None and not spec.estimate_n:
        # raise eagerly so the user sees the N requirement before sampling
        loglik_counts(ModelParams(1.0, 1.0, 0.5), data)
    fast_counts = spec.selector == "counts"
    if fast_counts:
        grid = GridSpec(data.T, spec.grid_steps) if spec.grid_steps else GridSpec.default(data.T)
        knots = data.schedule
        counts = data.counts
        K = data.K

    def target(values) -> float:
        values = np.asarray(values, dtype=float)
        try:
            params = spec.params_from(values)
        except DomainError:
            return -math.inf
        lp = log_prior(spec.priors, params)
        if lp == -math.inf:
            return lp
        try:
            if fast_counts:
                s = survival_at(params, knots, grid)
                if spec.estimate_n:
                    if s[-1] >= 1.0:
                        return -math.inf
                    n_pop = K / (1.0 - s[-1])
                else:
                    n_pop = data.N
                return lp + count_loglik_from_survival(s, counts, n_pop)
            return lp + log_likelihood(params, data, spec.selector)
        except IntegrationError:
            return -math.inf

    return target


def _default_start(spec: FitSpec) -> np.ndarray:
    guess = {"beta": 1.0, "gamma": 0.5, "rho": 0.05, "nu": 0.5}
    out = []
    for name, (lo, hi) in zip(spec.names, spec.priors.bounds(spec.names)):
        v = guess[name]
        if not lo < v < hi:
            v = lo + 1.0 if math.isinf(hi) else 0.5 * (lo + hi)
        out.append(v)
    return np.array(out)


def _numerical_hessian(f, z, step=1e-3):
    d = z.size
    hess = np.empty((d, d))
    f0 = f(z)
    for i in range(d):
        for j in range(i, d):
            ei = np.eye(d)[i] * step
            ej = np.eye(d)[j] * step
            if i == j:
                val = (f(z + ei) - 2 * f0 + f(z - ei)) / step**2
            else:
                val = (f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej) + f(z - ei - ej)) / (4 * step**2)
            hess[i, j] = hess[j, i] = val
    return hess


def find_mode(target, bounds, start, rng: np.random.Generator, n_candidates: int = 64):
    """Multi-start Nelder-Mead search for the mode on the unconstrained scale.

    Returns the constrained mode and an inverse-Hessian proposal shape (or
    ``None`` when the curvature estimate is not positive definite).
    """

    def neg(z):
        x = to_constrained(z, bounds)
        v = target(x)
        return -(v + log_jacobian(z, bounds)) if np.isfinite(v) else 1e300

    z0 = to_unconstrained(start, bounds)
    candidates = [z0] + [z0 + rng.normal(0.0, 1.0, z0.size) for _ in range(n_candidates - 1)]
    values = [neg(c) for c in candidates]
    order = np.argsort(values)[:3]
    best = None
    for k in order:
        if values[k] >= 1e300:
            continue
        res = minimize(neg, candidates[k], method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-8, "maxiter": 4000, "maxfev": 8000})
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise SamplerError("could not find a starting point with finite posterior density")
    cov = None
    hess = _numerical_hessian(neg, best.x)
    if np.all(np.isfinite(hess)):
        try:
            np.linalg.cholesky(hess)
            cov = np.linalg.inv(hess)
        except np.linalg.LinAlgError:
            cov = None
    return to_constrained(best.x, bounds), cov


@dataclass(eq=False)
class FitResult:
    spec: FitSpec
    chains: list
    summary: PosteriorSummary
    mode: np.ndarray

    @property
    def chain(self) -> Chain:
        return self.chains[0]

    def posterior_mean_params(self) -> ModelParams:
        return self.spec.params_from([self.summary.params[n].mean for n in self.spec.names])


def chain_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


def fit(data, spec: FitSpec, config: SamplerConfig, init=None, level: float = 0.05, chains: int = 1) -> FitResult:
    """Mode search followed by ``chains`` adaptive Metropolis chains.

    With one chain the sampler uses ``config.seed`` directly; further chains
    use seeds derived from it.
    """
    if chains < 1:
        raise ConfigError("need at least one chain")
    target = make_target(spec, data)
    bounds = spec.priors.bounds(spec.names)
    rng = np.random.default_rng([int(config.seed), 7919])
    start = _default_start(spec) if init is None else np.asarray(init, dtype=float)
    mode, cov = find_mode(target, bounds, start, rng)
    runs = []
    for k in range(chains):
        seed = config.seed if chains == 1 else chain_seed(config.seed, k)
        runs.append(run_chain(target, mode, replace(config, seed=seed), bounds=bounds, names=spec.names,
                              init_cov=cov))
    return FitResult(spec, runs, summarize(runs, level), mode)
