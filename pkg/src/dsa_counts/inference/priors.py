"""Prior distributions, parameter supports and unconstraining transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import ModelParams, Variant, parameter_names
from ..errors import ConfigError

__all__ = ["Gamma", "Uniform", "PriorSpec", "log_prior", "to_unconstrained", "to_constrained", "log_jacobian"]


@dataclass(frozen=True)
class Gamma:
    """Gamma(shape, rate) restricted to ``(lower, upper)``.

    The density is not renormalised for truncation; the constant does not
    matter for posterior sampling.
    """

    shape: float
    rate: float
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ConfigError("Gamma prior needs positive shape and rate")
        if not self.lower < self.upper or self.lower < 0:
            raise ConfigError("Gamma prior support must satisfy 0 <= lower < upper")

    def logpdf(self, x: float) -> float:
        if not self.lower < x < self.upper:
            return -math.inf
        return (self.shape * math.log(self.rate) - math.lgamma(self.shape)
                + (self.shape - 1.0) * math.log(x) - self.rate * x)

    def describe(self) -> dict:
        return {"dist": "gamma", "shape": self.shape, "rate": self.rate, "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper or not math.isfinite(self.upper - self.lower):
            raise ConfigError("Uniform prior needs finite lower < upper")

    def logpdf(self, x: float) -> float:
        if not self.lower < x < self.upper:
            return -math.inf
        return -math.log(self.upper - self.lower)

    def describe(self) -> dict:
        return {"dist": "uniform", "lower": self.lower, "upper": self.upper}


def prior_from_dict(spec: dict):
    spec = dict(spec)
    kind = spec.pop("dist", None)
    if kind == "gamma":
        return Gamma(**spec)
    if kind == "uniform":
        return Uniform(**spec)
    raise ConfigError(f"unknown prior distribution {kind!r}")


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors per sampled parameter plus optional joint constraints.

    ``gamma_below_beta`` enforces ``gamma < beta`` (used for the network
    model, where it reads ``gamma~ < beta~``).
    """

    priors: dict = field(default_factory=dict)
    gamma_below_beta: bool = False

    @classmethod
    def default(cls, variant=Variant.STANDARD, shape=0.1, rate=0.1) -> PriorSpec:
        priors = {}
        for name in parameter_names(variant):
            upper = 1.0 if name == "rho" else math.inf
            priors[name] = Gamma(shape, rate, upper=upper)
        return cls(priors)

    @classmethod
    def from_dict(cls, spec: dict) -> PriorSpec:
        spec = dict(spec)
        flag = bool(spec.pop("gamma_below_beta", False))
        return cls({name: prior_from_dict(p) for name, p in spec.items()}, gamma_below_beta=flag)

    def to_dict(self) -> dict:
        out = {name: p.describe() for name, p in self.priors.items()}
        if self.gamma_below_beta:
            out["gamma_below_beta"] = True
        return out

    def bounds(self, names) -> list[tuple[float, float]]:
        try:
            return [(self.priors[n].lower, self.priors[n].upper) for n in names]
        except KeyError as exc:
            raise ConfigError(f"no prior given for sampled parameter {exc.args[0]!r}") from None


def log_prior(priors: PriorSpec, params) -> float:
    """Sum of prior log-densities over the parameters that have priors."""
    values = params.as_dict() if isinstance(params, ModelParams) else dict(params)
    total = 0.0
    for name, prior in priors.priors.items():
        if name not in values:
            continue
        total += prior.logpdf(values[name])
        if total == -math.inf:
            return total
    if priors.gamma_below_beta and "gamma" in values and "beta" in values:
        if not values["gamma"] < values["beta"]:
            return -math.inf
    return total


# Transforms: (lo, inf) -> log(x - lo); (lo, hi) -> logit((x - lo) / (hi - lo)); (-inf, inf) -> identity.

def to_unconstrained(x, bounds) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    z = np.empty_like(x)
    for k, (lo, hi) in enumerate(bounds):
        if math.isinf(lo) and math.isinf(hi):
            z[k] = x[k]
        elif math.isinf(hi):
            z[k] = math.log(x[k] - lo)
        else:
            u = (x[k] - lo) / (hi - lo)
            z[k] = math.log(u) - math.log1p(-u)
    return z


def to_constrained(z, bounds) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    x = np.empty_like(z)
    for k, (lo, hi) in enumerate(bounds):
        if math.isinf(lo) and math.isinf(hi):
            x[k] = z[k]
        elif math.isinf(hi):
            x[k] = lo + math.exp(z[k])
        else:
            x[k] = lo + (hi - lo) / (1.0 + math.exp(-z[k]))
    return x


def log_jacobian(z, bounds) -> float:
    """``log |dx/dz|`` of :func:`to_constrained`."""
    total = 0.0
    for zk, (lo, hi) in zip(z, bounds):
        if math.isinf(lo) and math.isinf(hi):
            continue
        if math.isinf(hi):
            total += zk
        else:
            # log sigmoid(z) + log sigmoid(-z), computed stably
            total += math.log(hi - lo) - _softplus(-zk) - _softplus(zk)
    return total


def _softplus(v: float) -> float:
    return max(v, 0.0) + math.log1p(math.exp(-abs(v)))
