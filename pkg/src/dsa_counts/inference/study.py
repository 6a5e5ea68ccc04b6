"""Simulation studies: simulate, fit and score credible-interval coverage."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..dynamics import ModelParams, Variant
from ..errors import ConfigError, DSAError
from ..simulate import (
    aggregate_counts,
    derive_rng,
    sellke_simulate,
    sellke_simulate_frailty,
    simulate_dsa_events,
)
from .fitting import FitSpec, fit
from .sampler import SamplerConfig

__all__ = ["Scenario", "ReplicateResult", "CoverageReport", "simulate_scenario", "replicate_study"]

log = logging.getLogger(__name__)

GENERATORS = ("sellke", "dsa")


@dataclass(frozen=True)
class Scenario:
    truth: ModelParams
    N: int
    M: int
    T: float
    schedule: tuple
    replicates: int
    generator: str = "dsa"
    fit_spec: FitSpec | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    level: float = 0.05

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {GENERATORS}")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        object.__setattr__(self, "schedule", tuple(float(x) for x in self.schedule))
        if self.schedule[0] != 0 or self.schedule[-1] != self.T:
            raise ConfigError("schedule must run from 0 to T")
        if self.fit_spec is None:
            object.__setattr__(self, "fit_spec", FitSpec(variant=self.truth.variant))
        if self.generator == "sellke" and self.truth.variant is Variant.POISSON_NETWORK:
            raise ConfigError("exact network simulation is not provided; use the dsa generator")


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    ok: bool
    retried: bool
    K: int = 0
    summary: dict | None = None
    covered: dict | None = None
    error: str | None = None


@dataclass(frozen=True)
class CoverageReport:
    names: tuple
    truth: dict
    replicates: int
    failed: int
    coverage: dict
    mean_estimate: dict
    mean_sd: dict
    mean_ess_per_sec: dict
    results: tuple = ()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "truth": self.truth,
            "replicates": self.replicates,
            "failed": self.failed,
            "coverage": self.coverage,
            "mean_estimate": self.mean_estimate,
            "mean_sd": self.mean_sd,
            "mean_ess_per_sec": self.mean_ess_per_sec,
            "results": [vars(r) for r in self.results],
        }

    def table(self) -> str:
        rows = [f"{'param':<8}{'truth':>10}{'avg':>10}{'sd':>10}{'95% cvg':>10}{'ESS/s':>10}"]
        for n in self.names:
            rows.append(f"{n:<8}{self.truth[n]:>10.4g}{self.mean_estimate[n]:>10.4f}{self.mean_sd[n]:>10.4f}"
                        f"{self.coverage[n]:>10.2f}{self.mean_ess_per_sec[n]:>10.2f}")
        rows.append(f"replicates: {self.replicates}  failed: {self.failed}")
        return "\n".join(rows) + "\n"


def simulate_scenario(scenario: Scenario, rng: np.random.Generator, traj=None):
    truth = scenario.truth
    if scenario.generator == "dsa":
        events = simulate_dsa_events(truth, scenario.N, scenario.M, scenario.T, rng, traj=traj)
    elif truth.variant is Variant.GAMMA_FRAILTY:
        events = sellke_simulate_frailty(truth, scenario.N, scenario.M, scenario.T, rng)
    else:
        events = sellke_simulate(truth, scenario.N, scenario.M, scenario.T, rng)
    return events


def _fit_data(scenario: Scenario, events):
    if scenario.fit_spec.selector == "counts":
        return aggregate_counts(events, scenario.schedule)
    return events


def _run_replicate(scenario: Scenario, seed: int, index: int) -> ReplicateResult:
    rng = derive_rng(seed, index)
    events = simulate_scenario(scenario, rng)
    data = _fit_data(scenario, events)
    spec = scenario.fit_spec
    truth = scenario.truth.as_dict()
    chain_seed = int(rng.integers(2**63))
    retried = False
    init = None
    for attempt in range(2):
        try:
            result = fit(data, spec, replace(scenario.sampler, seed=chain_seed), init=init, level=scenario.level)
            break
        except DSAError as exc:
            if attempt == 1:
                return ReplicateResult(index, False, True, events.K, error=str(exc))
            retried = True
            jitter = np.exp(rng.normal(0.0, 0.2, len(spec.names)))
            init = np.array([truth[n] for n in spec.names]) * jitter
            if "rho" in spec.names:
                k = spec.names.index("rho")
                init[k] = min(init[k], 0.5)
    summary = {n: vars(p).copy() for n, p in result.summary.params.items()}
    covered = {n: bool(result.summary.params[n].covers(truth[n])) for n in spec.names}
    return ReplicateResult(index, True, retried, events.K, summary, covered)


def _aggregate(scenario: Scenario, results) -> CoverageReport:
    names = scenario.fit_spec.names
    ok = [r for r in results if r.ok]
    truth = {n: scenario.truth.as_dict()[n] for n in names}

    def mean_of(key):
        if not ok:
            return {n: float("nan") for n in names}
        return {n: float(np.mean([r.summary[n][key] for r in ok])) for n in names}

    coverage = {n: (float(np.mean([r.covered[n] for r in ok])) if ok else float("nan")) for n in names}
    return CoverageReport(names, truth, len(results), len(results) - len(ok), coverage,
                          mean_of("mean"), mean_of("sd"), mean_of("ess_per_sec"), tuple(results))


def replicate_study(scenario: Scenario, seed: int, workers: int | None = None, progress=None) -> CoverageReport:
    """Run ``scenario.replicates`` simulate-then-fit replicates.

    Replicate ``r`` uses a stream derived from ``(seed, r)``, so results do
    not depend on ``workers`` or completion order.
    """
    workers = workers or os.cpu_count() or 1
    indices = range(scenario.replicates)
    started = time.perf_counter()
    results = []
    if workers == 1 or scenario.replicates == 1:
        for r in indices:
            results.append(_run_replicate(scenario, seed, r))
            if progress:
                progress(r + 1, scenario.replicates)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_replicate, scenario, seed, r) for r in indices]
            for k, fut in enumerate(futures):
                results.append(fut.result())
                if progress:
                    progress(k + 1, scenario.replicates)
    results.sort(key=lambda r: r.index)
    log.info("replicate study finished in %.1fs", time.perf_counter() - started)
    return _aggregate(scenario, results)
