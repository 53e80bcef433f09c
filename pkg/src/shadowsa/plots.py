"""Figure rendering for run reports.

Uses the non interactive Agg backend so figures render to files in
headless batch runs.  Every function writes one image and returns its
path; the delimited data the figure was drawn from is always written
separately by the caller.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

__all__ = [
    "trace_figure",
    "histogram_figure",
    "boxplot_figure",
    "pattern_figure",
    "stats_trace_figure",
]


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _component_names(names, k: int) -> list[str]:
    if names and len(names) == k:
        return [str(n) for n in names]
    return [f"theta_{i + 1}" for i in range(k)]


def trace_figure(iterations, thetas, path, names=(), temperatures=None) -> Path:
    """Stacked parameter traces over outer iterations.

    When temperatures are given an extra bottom panel shows the cooling
    schedule on a log scale.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    k = thetas.shape[1]
    names = _component_names(names, k)
    rows = k + (1 if temperatures is not None else 0)
    fig, axes = plt.subplots(
        rows, 1, sharex=True, figsize=(8.0, 1.0 + 1.8 * rows), squeeze=False
    )
    for i in range(k):
        ax = axes[i, 0]
        ax.plot(iterations, thetas[:, i], lw=0.8, color="tab:blue")
        ax.set_ylabel(names[i])
        ax.grid(alpha=0.3)
    if temperatures is not None:
        ax = axes[-1, 0]
        ax.plot(iterations, temperatures, lw=0.8, color="tab:red")
        ax.set_yscale("log")
        ax.set_ylabel("T")
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("outer iteration")
    return _finish(fig, path)


def _epanechnikov_curve(values: np.ndarray, grid_size: int = 256):
    n = values.size
    sigma = values.std(ddof=1) if n > 1 else 0.0
    lo, hi = float(values.min()), float(values.max())
    if sigma == 0.0 or hi == lo:
        return None, None
    h = 2.34 * sigma * n ** (-0.2)
    grid = np.linspace(lo - h, hi + h, grid_size)
    u = (grid[None, :] - values[:, None]) / h
    density = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0).sum(axis=0)
    return grid, density / (n * h)


def histogram_figure(samples, path, names=()) -> Path:
    """Per component histogram with an Epanechnikov density overlay."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    k = samples.shape[1]
    names = _component_names(names, k)
    fig, axes = plt.subplots(1, k, figsize=(3.2 * k + 1.0, 3.2), squeeze=False)
    for i in range(k):
        ax = axes[0, i]
        values = samples[:, i]
        ax.hist(values, bins=40, density=True, color="tab:blue", alpha=0.55)
        grid, density = _epanechnikov_curve(values)
        if grid is not None:
            ax.plot(grid, density, color="tab:red", lw=1.2)
        ax.set_xlabel(names[i])
        ax.grid(alpha=0.3)
    axes[0, 0].set_ylabel("density")
    return _finish(fig, path)


def boxplot_figure(groups, path, names=()) -> Path:
    """One panel per component, one box per labelled sample group."""
    if not groups:
        raise ValueError("boxplot needs at least one group")
    labels = [str(label) for label, _ in groups]
    arrays = [np.atleast_2d(np.asarray(arr, dtype=float)) for _, arr in groups]
    k = arrays[0].shape[1]
    names = _component_names(names, k)
    fig, axes = plt.subplots(1, k, figsize=(1.0 + 1.6 * len(groups) * k, 3.4), squeeze=False)
    for i in range(k):
        ax = axes[0, i]
        ax.boxplot([arr[:, i] for arr in arrays], tick_labels=labels)
        ax.set_title(names[i])
        ax.grid(alpha=0.3)
    return _finish(fig, path)


def pattern_figure(pattern, path, spines=None) -> Path:
    """Render a pattern: points, segments or a 3-D scatter with spines."""
    window = pattern.window
    if window.dim == 3:
        fig = plt.figure(figsize=(6.0, 5.4))
        ax = fig.add_subplot(projection="3d")
        pts = pattern.points
        if pts.shape[0]:
            ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=6, color="tab:blue")
        if spines is not None:
            for poly in spines:
                poly = np.asarray(poly, dtype=float)
                ax.plot(poly[:, 0], poly[:, 1], poly[:, 2], color="tab:red", lw=1.5)
        ax.set_xlim(window.lower[0], window.upper[0])
        ax.set_ylim(window.lower[1], window.upper[1])
        ax.set_zlim(window.lower[2], window.upper[2])
        return _finish(fig, path)
    side = window.upper - window.lower
    aspect = float(side[1] / side[0])
    fig, ax = plt.subplots(figsize=(6.0, max(2.2, min(10.0, 6.0 * aspect))))
    if pattern.kind == "segments" and pattern.n:
        ax.add_collection(LineCollection(pattern.endpoints(), color="tab:blue", lw=1.2))
        ax.scatter(pattern.points[:, 0], pattern.points[:, 1], s=4, color="tab:blue")
    elif pattern.n:
        ax.scatter(pattern.points[:, 0], pattern.points[:, 1], s=10, color="tab:blue")
    ax.set_xlim(window.lower[0], window.upper[0])
    ax.set_ylim(window.lower[1], window.upper[1])
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def stats_trace_figure(samples, path, names=()) -> Path:
    """Thinned statistic traces over sample index."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    k = samples.shape[1]
    names = _component_names(names, k)
    index = np.arange(1, samples.shape[0] + 1)
    fig, axes = plt.subplots(k, 1, sharex=True, figsize=(8.0, 1.0 + 1.6 * k), squeeze=False)
    for i in range(k):
        ax = axes[i, 0]
        ax.plot(index, samples[:, i], lw=0.8, color="tab:blue")
        ax.set_ylabel(names[i])
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("sample")
    return _finish(fig, path)
