"""Static figures for scenario artifacts (PNG via the Agg canvas, no pyplot state)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {"dpi": 100, "figsize": (6.4, 4.0)}
TINY = 1e-18


def _figure(nrows=1, ncols=1, **kw):
    fig = Figure(figsize=kw.pop("figsize", STYLE["figsize"]), dpi=STYLE["dpi"])
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # no Software/creation tags, so reruns are byte-identical
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def residuals(values, tolerance: float, path, title: str = "", ylabel: str = "residual") -> Path:
    """Per-sample residuals on a log axis with the tolerance as a horizontal line."""
    fig, ax = _figure()
    ax = ax[0, 0]
    v = np.maximum(np.abs(np.asarray(values, dtype=float)), TINY)
    ax.semilogy(np.arange(len(v)), v, ".", ms=3, color="C0", label="sample")
    ax.axhline(tolerance, color="C3", lw=1, ls="--", label=f"tolerance {tolerance:g}")
    ax.set_xlabel("sample")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return save(fig, path)


def trajectory(traj, path, title: str = "") -> Path:
    """Orbit in the (q1, q2) plane and energy error against time."""
    fig, ax = _figure(1, 2, figsize=(9.0, 4.0))
    q = traj.states[:, :3]
    ax[0, 0].plot(q[:, 0], q[:, 1], lw=1)
    ax[0, 0].plot(q[0, 0], q[0, 1], "o", color="C3", ms=4)
    ax[0, 0].set_aspect("equal", adjustable="datalim")
    ax[0, 0].set_xlabel("q1")
    ax[0, 0].set_ylabel("q2")
    ax[0, 0].set_title(title)
    dE = np.maximum(np.abs(traj.energy - traj.energy[0]), TINY)
    ax[0, 1].semilogy(traj.times, dE, lw=1, label="|H - H0|")
    for label, series in traj.casimirs.items():
        ax[0, 1].semilogy(traj.times, np.maximum(np.abs(series - series[0]), TINY), lw=1, label=label)
    ax[0, 1].set_xlabel("t")
    ax[0, 1].set_ylabel("drift")
    ax[0, 1].legend(loc="best", fontsize=8)
    return save(fig, path)


def maxwell_diagnostics(run, path, title: str = "") -> Path:
    fig, ax = _figure(1, 2, figsize=(9.0, 4.0))
    t = run.times
    ax[0, 0].semilogy(t, np.maximum(np.abs(run.energy - run.energy[0]), TINY), lw=1, label="energy")
    ax[0, 0].semilogy(t, np.maximum(np.abs(run.helicity - run.helicity[0]), TINY), lw=1, label="helicity")
    ax[0, 0].set_xlabel("t")
    ax[0, 0].set_ylabel("drift")
    ax[0, 0].set_title(title)
    ax[0, 0].legend(loc="best", fontsize=8)
    ax[0, 1].semilogy(t, np.maximum(run.divE, TINY), lw=1, label="max |div E|")
    ax[0, 1].semilogy(t, np.maximum(run.divB, TINY), lw=1, label="max |div B|")
    ax[0, 1].set_xlabel("t")
    ax[0, 1].legend(loc="best", fontsize=8)
    return save(fig, path)


def field_slice(grid, state, path, component: int = 2, title: str = "") -> Path:
    """``B`` component on the z = 0 plane."""
    fig, ax = _figure()
    ax = ax[0, 0]
    im = ax.imshow(state.B[component, :, :, 0].T, origin="lower", extent=(0, grid.L, 0, grid.L), cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title or f"B{'xyz'[component]} at z = 0")
    return save(fig, path)


def summary(rows, path, title: str = "verification summary") -> Path:
    """Horizontal bars of ``log10(value / tolerance)``; failing rows in red.

    ``rows`` are dicts with ``label``, ``value``, ``tolerance``, ``comparison`` and ``status``.
    """
    rows = [r for r in rows if r["value"] is not None]
    fig, ax = _figure(figsize=(7.0, max(2.0, 0.35 * len(rows) + 1.2)))
    ax = ax[0, 0]
    if not rows:
        ax.text(0.5, 0.5, "no measured checks", ha="center", va="center")
        ax.set_axis_off()
        return save(fig, path)
    ratio = [np.log10(max(abs(r["value"]), TINY) / r["tolerance"]) for r in rows]
    colors = ["C2" if r["status"] == "pass" else "C3" for r in rows]
    y = np.arange(len(rows))
    ax.barh(y, ratio, color=colors)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(y)
    ax.set_yticklabels([r["label"] for r in rows], fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("log10(value / tolerance)")
    ax.set_title(title)
    return save(fig, path)
