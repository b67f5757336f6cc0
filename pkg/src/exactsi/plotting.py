"""Scatter panels for 2-D experiments, rendered to standalone SVG files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import TrainingSet
from .exceptions import NotApplicableError

__all__ = ["emit_scatter"]

_CLASS_STYLE = {
    "CONVERGED": dict(color="#d62728", label="converged"),
    "VICINITY": dict(color="#ff9f1c", label="vicinity"),
    "DIVERGED": dict(color="#7f3fbf", label="diverged (clipped)"),
    None: dict(color="#d62728", label="generated"),
}


def emit_scatter(points, anchors: TrainingSet, path, title: str = "") -> None:
    """Write one SVG panel: anchors vs generated points, classes color-coded.

    ``points`` is a sequence of (2-vector, class-or-None) pairs.  Axes are
    auto-scaled with a 5% margin around the anchors and the non-diverged
    points; diverged points are clipped to the plot boundary and counted in
    an annotation.
    """
    if anchors.d != 2:
        raise NotApplicableError(f"scatter plots need d=2, got d={anchors.d}")
    vecs = [np.asarray(v, dtype=float).reshape(2) for v, _ in points]
    labels = [c for _, c in points]

    finite = [v for v, c in zip(vecs, labels) if c != "DIVERGED"]
    frame = np.vstack([anchors.points] + ([np.vstack(finite)] if finite else []))
    lo = frame.min(axis=0)
    hi = frame.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - 0.05 * span
    hi = hi + 0.05 * span

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    n_div = 0
    by_class: dict = {}
    for v, c in zip(vecs, labels):
        if c == "DIVERGED":
            n_div += 1
            v = np.clip(v, lo, hi)
        by_class.setdefault(c, []).append(v)
    for c, vs in by_class.items():
        arr = np.vstack(vs)
        style = _CLASS_STYLE.get(c, _CLASS_STYLE[None])
        ax.scatter(arr[:, 0], arr[:, 1], s=12, alpha=0.65, zorder=2, **style)
    ax.scatter(
        anchors.points[:, 0],
        anchors.points[:, 1],
        marker="*",
        s=160,
        color="#1f77b4",
        edgecolor="black",
        linewidths=0.5,
        zorder=3,
        label="anchors",
    )
    if n_div:
        ax.annotate(
            f"{n_div} diverged (clipped to frame)",
            xy=(0.02, 0.02),
            xycoords="axes fraction",
            fontsize=8,
            color="#7f3fbf",
        )
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal", adjustable="box")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
