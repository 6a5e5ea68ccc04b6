"""Preset run configurations for the simulation studies and case-study workflows.

A recipe is a partial config tree; config files and command-line flags are
layered on top of it.
"""

from __future__ import annotations

import copy

from .errors import ConfigError

DAILY = {"step": 1.0}

_GAMMA_01 = {"dist": "gamma", "shape": 0.1, "rate": 0.1}
_GAMMA_1 = {"dist": "gamma", "shape": 1.0, "rate": 1.0}


def _gamma(shape, rate, **bounds):
    return {"dist": "gamma", "shape": shape, "rate": rate, **bounds}


RECIPES = {
    # DSA-generated counts, fitted with the matching count likelihood.
    "dsa-benchmark": {
        "model": "standard",
        "scenario": {"truth": {"beta": 2.0, "gamma": 1.0, "rho": 0.05}, "N": 1000, "T": 10.0,
                     "schedule": DAILY, "generator": "dsa", "replicates": 50},
        "priors": {"beta": _GAMMA_01, "gamma": _GAMMA_01, "rho": {**_GAMMA_01, "upper": 1.0}},
    },
    # Exact (Sellke) epidemics fitted with the count likelihood.
    "sellke-benchmark": {
        "model": "standard",
        "scenario": {"truth": {"beta": 2.0, "gamma": 0.5, "rho": 0.05}, "N": 1000, "T": 10.0,
                     "schedule": DAILY, "generator": "sellke", "replicates": 50},
        "priors": {"beta": _GAMMA_01, "gamma": _GAMMA_01, "rho": {**_GAMMA_01, "upper": 1.0}},
    },
    "frailty": {
        "model": "frailty",
        "scenario": {"truth": {"beta": 2.0, "gamma": 0.5, "rho": 0.05, "nu": 0.1}, "N": 1000, "T": 10.0,
                     "schedule": DAILY, "generator": "sellke", "replicates": 25},
        "priors": {"beta": _GAMMA_1, "gamma": _GAMMA_1, "rho": {**_GAMMA_1, "upper": 1.0}, "nu": _GAMMA_1},
    },
    "network": {
        "model": "network",
        "scenario": {"truth": {"beta": 1.5, "gamma": 1.0, "rho": 0.05}, "N": 5000, "T": 15.0,
                     "schedule": DAILY, "generator": "dsa", "replicates": 10},
        "priors": {"beta": _GAMMA_01, "gamma": _GAMMA_01, "rho": {**_GAMMA_01, "upper": 1.0}},
    },
    # Network model on daily counts with unknown N, estimated by K / (1 - S_T).
    "ebola": {
        "model": "network",
        "data": {"estimate_n": True},
        "priors": {
            "beta": _gamma(0.02, 0.02, lower=0.1),
            "gamma": _gamma(0.02, 0.02),
            "rho": {"dist": "uniform", "lower": 0.0, "upper": 0.015},
            "gamma_below_beta": True,
        },
    },
    "covid": {
        "model": "standard",
        "fixed": {"gamma": 1.0 / 6.0},
        "priors": {"beta": _gamma(0.2, 0.2), "rho": {"dist": "uniform", "lower": 0.0, "upper": 1.0}},
    },
    "covid-frailty": {
        "model": "frailty",
        "fixed": {"gamma": 1.0 / 6.0},
        "priors": {"beta": _gamma(0.2, 0.2), "nu": _gamma(0.2, 0.2),
                   "rho": {"dist": "uniform", "lower": 0.0, "upper": 1.0}},
    },
}


def get_recipe(name: str) -> dict:
    try:
        return copy.deepcopy(RECIPES[name])
    except KeyError:
        raise ConfigError(f"unknown recipe {name!r}; available: {', '.join(sorted(RECIPES))}") from None
