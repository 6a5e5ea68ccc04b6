"""Posterior summaries and chain diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SamplerError

__all__ = ["autocorrelation", "effective_sample_size", "ParamSummary", "PosteriorSummary", "summarize"]


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation of a 1-D series via zero-padded FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(centred, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:n]
    if acov[0] <= 0:
        return np.concatenate([[1.0], np.zeros(n - 1)])
    return acov / acov[0]


def effective_sample_size(x) -> float:
    """Geyer's initial monotone positive sequence estimator.

    A constant series has no information about its autocorrelation; by
    convention its ESS is 1. The estimate is capped at the series length.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.ptp(x) == 0:
        return 1.0
    rho = autocorrelation(x)
    m = (n - 1) // 2
    pairs = rho[0: 2 * m: 2] + rho[1: 2 * m + 1: 2]
    positive = pairs > 0
    stop = int(np.argmin(positive)) if not positive.all() else pairs.size
    pairs = np.minimum.accumulate(pairs[:stop]) if stop else pairs[:1]
    tau = -1.0 + 2.0 * pairs.sum()
    return float(min(n, n / max(tau, 1e-12)))


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    sd: float
    lower: float
    upper: float
    ess: float
    ess_per_sec: float

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class PosteriorSummary:
    params: dict
    level: float
    n_draws: int
    acceptance_rate: float
    wall_time: float

    def means(self) -> dict:
        return {k: v.mean for k, v in self.params.items()}

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "n_draws": self.n_draws,
            "acceptance_rate": self.acceptance_rate,
            "wall_time": self.wall_time,
            "params": {k: vars(v).copy() for k, v in self.params.items()},
        }

    def table(self) -> str:
        head = f"{'param':<8}{'avg':>10}{'sd':>10}{'lower':>10}{'upper':>10}{'ESS':>10}{'ESS/s':>10}"
        rows = [head]
        for name, p in self.params.items():
            rows.append(f"{name:<8}{p.mean:>10.4f}{p.sd:>10.4f}{p.lower:>10.4f}{p.upper:>10.4f}"
                        f"{p.ess:>10.1f}{p.ess_per_sec:>10.2f}")
        return "\n".join(rows) + "\n"


def summarize(chains, level: float = 0.05) -> PosteriorSummary:
    """Means, sds, equal-tailed ``1 - level`` intervals and ESS of retained draws.

    ``chains`` is one chain or a list of chains sharing parameter names; draws
    are pooled and per-chain ESS values summed.
    """
    chains = list(chains) if isinstance(chains, (list, tuple)) else [chains]
    names = chains[0].names
    if any(c.names != names for c in chains):
        raise SamplerError("chains disagree on parameter names")
    draws = np.concatenate([c.retained for c in chains])
    if draws.shape[0] == 0:
        raise SamplerError("chain has no retained draws")
    wall = sum(c.wall_time for c in chains)
    accept = float(np.mean([c.acceptance_rate for c in chains]))
    out = {}
    for k, name in enumerate(names):
        col = draws[:, k]
        lo, hi = np.quantile(col, [level / 2, 1 - level / 2])
        ess = float(sum(effective_sample_size(c.retained[:, k]) for c in chains))
        sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
        ess_rate = ess / wall if wall > 0 else float("nan")
        out[name] = ParamSummary(float(col.mean()), sd, float(lo), float(hi), ess, ess_rate)
    return PosteriorSummary(out, level, int(draws.shape[0]), accept, wall)
