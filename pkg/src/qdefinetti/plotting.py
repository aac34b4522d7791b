"""Figures written next to CLI reports.

All functions draw with the non-interactive Agg backend and write a file;
nothing is shown on screen.
"""
from __future__ import annotations

from contextlib import contextmanager

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_WIDTH = 6.4
GOLDEN = (np.sqrt(5) - 1) / 2

_STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


@contextmanager
def figure(nrows=1, ncols=1, height=None, **kwargs):
    height = FIGURE_WIDTH * GOLDEN if height is None else height
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(FIGURE_WIDTH, height), **kwargs)
        try:
            yield fig, axes
        finally:
            plt.close(fig)


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})


def plot_trajectory(traj, path):
    """Posterior weights and Choi trace distance against shot number."""
    weights = np.array(traj.weights) if traj.weights else np.atleast_2d(traj.prior)
    shots = np.array(traj.shots) if traj.shots else np.array([0])
    with figure(2, 1, height=FIGURE_WIDTH * 0.8, sharex=True) as (fig, (ax_w, ax_d)):
        for i, label in enumerate(traj.labels):
            lw = 2.0 if i == traj.truth_index else 1.0
            ax_w.plot(shots, weights[:, i], lw=lw, label=label + (" (truth)" if i == traj.truth_index else ""))
        if traj.target is not None:
            ax_w.axhline(traj.target, color="0.5", ls=":", lw=0.8)
        ax_w.set_ylabel("posterior weight")
        ax_w.set_ylim(-0.02, 1.02)
        ax_w.legend(loc="center right", frameon=False)
        ax_w.set_title(f"posterior trajectory (seed {traj.seed})")
        dist = np.maximum(np.array(traj.distances), 1e-300) if traj.distances else np.array([np.nan])
        ax_d.semilogy(shots, dist, color="k", lw=1.0)
        ax_d.set_xlabel("shot")
        ax_d.set_ylabel("Choi trace distance\nto truth")
        _save(fig, path)


def plot_exchangeability(report, path):
    """Symmetry and extension deviations per level, against the tolerance."""
    levels = np.array(report.levels)
    floor = 1e-18
    with figure() as (fig, ax):
        ax.semilogy(levels, np.maximum(report.symmetry_deviations, floor), "o-", label="symmetry")
        if report.extension_deviations:
            ax.semilogy(levels[:-1] + 0.5, np.maximum(report.extension_deviations, floor), "s-",
                        label="extension (n, n+1)")
            ax.semilogy(levels[:-1] + 0.5, np.maximum(report.choi_marginal_deviations, floor), "^:",
                        label="Choi marginal (n, n+1)")
        ax.axhline(report.tolerance, color="r", ls="--", lw=0.8, label="tolerance")
        ax.set_xlabel("number of systems n")
        ax.set_ylabel("max-entry deviation")
        ax.set_xticks(levels)
        ax.legend(frameon=False)
        ax.set_title("exchangeability " + ("passed" if report.passed else "FAILED"))
        _save(fig, path)


def plot_weights(weights, labels, path, title="recovered weights"):
    with figure() as (fig, ax):
        x = np.arange(len(weights))
        ax.bar(x, weights, color="C0")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45 if len(labels) > 6 else 0)
        ax.set_ylabel("weight")
        ax.set_title(title)
        _save(fig, path)


def plot_spectrum(eigenvalues, path, title="Choi spectrum"):
    with figure() as (fig, ax):
        ev = np.asarray(eigenvalues)
        colors = ["C3" if v < 0 else "C0" for v in ev]
        ax.bar(np.arange(len(ev)), ev, color=colors)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("index (ascending)")
        ax.set_ylabel("eigenvalue")
        ax.set_title(title)
        _save(fig, path)


def plot_moments(ns, moments, threshold, path, title="output-trace moments"):
    with figure() as (fig, ax):
        ax.plot(ns, moments, "o-")
        ax.axhspan(1 - threshold, 1 + threshold, color="0.9", label="1 +/- threshold")
        ax.set_xlabel("n")
        ax.set_ylabel("moment")
        ax.set_yscale("log")
        ax.legend(frameon=False)
        ax.set_title(title)
        _save(fig, path)
