"""Figures for the CLI report path, rendered off-screen with the Agg canvas."""
from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.tri import Triangulation

from .spaces import Function

__all__ = ["plot_solution", "plot_spectra", "save_figure"]


def save_figure(fig: Figure, path: str) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata={"Software": None})


def plot_solution(u: Function, path: str, title: str = "") -> None:
    """Filled contour of a 2D function through its node values."""
    xy = u.space.node_coordinates
    tri = Triangulation(xy[:, 0], xy[:, 1])
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    cs = ax.tricontourf(tri, np.real(u.values), levels=20)
    fig.colorbar(cs, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    save_figure(fig, path)


def plot_spectra(
    spectra: Mapping[str, Sequence[complex]],
    path: str,
    reference: Sequence[float] | None = None,
    title: str = "",
) -> None:
    """Real part of each spectrum against mode index, one marker series per entry."""
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    markers = "osd^v<>"
    for k, (label, vals) in enumerate(spectra.items()):
        vals = np.asarray(vals, dtype=complex)
        ax.plot(np.arange(1, len(vals) + 1), vals.real, markers[k % len(markers)],
                label=label, fillstyle="none")
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        ax.plot(np.arange(1, len(ref) + 1), ref, "k-", lw=0.8, label="exact")
    ax.set_xlabel("mode")
    ax.set_ylabel("Re(eigenvalue)")
    ax.legend()
    if title:
        ax.set_title(title)
    save_figure(fig, path)
