"""Figures written next to the CSV/JSON outputs of the CLI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "font.size": 9,
    "font.family": "DejaVu Sans",
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
    "svg.hashsalt": "dsa-counts",
}

# Drop the version string so figures are byte-stable across matplotlib patch releases.
_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_METADATA)
    plt.close(fig)


def plot_counts(data, path, title=None):
    """Bar chart of interval counts."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        edges = data.schedule
        ax.bar(edges[:-1], data.counts, width=np.diff(edges), align="edge", color="#8da0cb", edgecolor="white")
        ax.set_xlabel("time")
        ax.set_ylabel("infections per interval")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_density_overlay(data, t, density, path, label="fitted density"):
    """Count histogram normalised to unit area with the infection-time density on top."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        edges = data.schedule
        widths = np.diff(edges)
        heights = data.counts / (max(data.K, 1) * widths)
        ax.bar(edges[:-1], heights, width=widths, align="edge", color="#d9d9d9", edgecolor="white",
               label="observed (normalised)")
        ax.plot(t, density, color="#1b7837", label=label)
        ax.set_xlabel("time")
        ax.set_ylabel("density")
        ax.legend()
        _save(fig, path)


def plot_traces(chain, path):
    names = chain.names
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(names), 1, sharex=True, figsize=(6.0, 1.4 * len(names) + 0.6))
        axes = np.atleast_1d(axes)
        it = np.arange(chain.draws.shape[0])
        for ax, k in zip(axes, range(len(names))):
            ax.plot(it, chain.draws[:, k], color="#4d4d4d", lw=0.4)
            ax.axvline(chain.burn_in, color="#b2182b", lw=0.8, ls="--")
            ax.set_ylabel(names[k])
        axes[-1].set_xlabel("iteration")
        _save(fig, path)


def plot_coverage(report, path):
    """Per-replicate credible intervals against the truth, one panel per parameter."""
    names = report.names
    ok = [r for r in report.results if r.ok]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(names), figsize=(2.4 * len(names), 3.2))
        axes = np.atleast_1d(axes)
        for ax, name in zip(axes, names):
            for y, r in enumerate(ok):
                s = r.summary[name]
                color = "#2166ac" if r.covered[name] else "#b2182b"
                ax.plot([s["lower"], s["upper"]], [y, y], color=color, lw=0.8)
                ax.plot(s["mean"], y, "o", color=color, ms=2)
            ax.axvline(report.truth[name], color="black", lw=0.8)
            ax.set_title(f"{name}: cvg {report.coverage[name]:.2f}")
            ax.set_yticks([])
        axes[0].set_ylabel("replicate")
        _save(fig, path)
