"""Matplotlib renderers for the report artifacts.

Figures follow the conventions of threshold plots: TRIP curves against the
level-0 identity line with circles at pseudothresholds and an asterisk at
the asymptotic threshold; TIFDs as normalized arrow fields with circles at
fixed points; threshold sets as classified rasters with the largest cube
outlined.  SVG output is deterministic (fixed hash salt, no date metadata).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "flowmap"

_CLASS_COLORS = {"below": "#3a7d44", "above": "#b33a3a", "undetermined": "#c9c9c9"}


def save_figure(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_trip(curves, pseudothresholds=(), asymptote=None, log_axes=False, title=""):
    """Level-L curves vs the identity line; circles mark the crossings."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    gammas = [s[0] for s in curves[0].samples]
    ax.plot(gammas, gammas, "k--", lw=1, label="L=0")
    for curve in curves:
        xs = [s[0] for s in curve.samples]
        ys = [s[1] for s in curve.samples]
        ax.plot(xs, ys, lw=1.2, label=f"L={curve.level}")
    for value in pseudothresholds:
        ax.plot([value], [value], "o", mfc="none", mec="k", ms=8)
    if asymptote is not None:
        ax.plot([asymptote], [asymptote], "k*", ms=11)
        ax.axvline(asymptote, color="k", lw=1.6, alpha=0.6)
    if log_axes:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("initial failure probability")
    ax.set_ylabel("simulated failure probability")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return fig


def plot_mc_trip(curve, fit=None, title=""):
    """Monte-Carlo TRIP with error bars, identity line, and fitted crossing."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    xs = np.array([p.gamma_loc for p in curve.points])
    ys = np.array([p.p_hat for p in curve.points])
    es = np.array([p.stderr for p in curve.points])
    ax.errorbar(xs, ys, yerr=es, fmt="s-", ms=3, lw=1, capsize=2, label="L=1 estimate")
    ax.plot(xs, xs, "k--", lw=1, label="L=0")
    if fit is not None:
        dense = np.geomspace(xs.min(), xs.max(), 200)
        model = fit.coefficients[0] * dense**2
        if fit.cubic and len(fit.coefficients) > 1:
            model = model + fit.coefficients[1] * dense**3
        ax.plot(dense, model, ":", lw=1, label="quadratic fit")
        ax.plot([fit.value], [fit.value], "o", mfc="none", mec="k", ms=8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("location failure probability")
    ax.set_ylabel("estimated failure probability")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return fig


def plot_tifd(field, fixed_points=(), trajectories=(), title=""):
    """Normalized arrow field; circles at fixed points, dashed trajectories."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    pts, arrows = field.points, field.normalized
    ax.quiver(
        pts[:, 0],
        pts[:, 1],
        arrows[:, 0],
        arrows[:, 1],
        field.magnitudes,
        angles="xy",
        width=0.003,
        cmap="viridis",
    )
    for p in fixed_points:
        ax.plot([p[field.plane[0]]], [p[field.plane[1]]], "o", mfc="none", mec="k", ms=9, mew=1.5)
    for orbit in trajectories:
        xs = [q[field.plane[0]] for q in orbit]
        ys = [q[field.plane[1]] for q in orbit]
        ax.plot(xs, ys, "k--", lw=1.4)
        ax.plot(xs, ys, "d", ms=4, color="k")
        ax.plot(xs[:1], ys[:1], "s", ms=7, mfc="none", mec="k")
    ax.set_xlabel(field.plane[0])
    ax.set_ylabel(field.plane[1])
    if title:
        ax.set_title(title)
    return fig


def plot_threshold_set(report, title=""):
    """Classified slice with the boundary polyline and the largest cube."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    code = np.zeros(report.classes.shape, dtype=float)
    code[report.classes == "below"] = 1.0
    code[report.classes == "above"] = 2.0
    ax.pcolormesh(
        report.xs,
        report.ys,
        code.T,
        cmap=matplotlib.colors.ListedColormap(
            [_CLASS_COLORS["undetermined"], _CLASS_COLORS["below"], _CLASS_COLORS["above"]]
        ),
        vmin=0,
        vmax=2,
        shading="nearest",
    )
    bx = [p[0] for p in report.boundary]
    by = [p[1] for p in report.boundary]
    ax.plot(bx, by, "k-", lw=1.6)
    edge = report.largest_cube_edge
    if edge > 0:
        ax.plot([0, edge, edge, 0, 0], [0, 0, edge, edge, 0], "w-", lw=1.4)
    ax.set_xlabel(report.slice_spec.plane[0])
    ax.set_ylabel(report.slice_spec.plane[1])
    if title:
        ax.set_title(title)
    return fig


def plot_trajectory(orbit, plane, title=""):
    """Orbit in a 2-D plane: squares at the start, diamonds per level."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    xs = [float(p[plane[0]]) for p in orbit]
    ys = [float(p[plane[1]]) for p in orbit]
    ax.plot(xs, ys, "k--", lw=1.2)
    ax.plot(xs, ys, "d", color="k", ms=5)
    ax.plot(xs[:1], ys[:1], "s", ms=8, mfc="none", mec="k")
    ax.set_xlabel(plane[0])
    ax.set_ylabel(plane[1])
    if title:
        ax.set_title(title)
    return fig
