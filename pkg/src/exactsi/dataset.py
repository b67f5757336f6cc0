"""Training anchors: construction, validation, CSV round-trips, toy sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError

__all__ = ["TrainingSet", "load_csv", "save_csv", "uniform_toy"]

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class TrainingSet:
    """An n x d matrix of anchor points, immutable after construction.

    Duplicate anchors are rejected because they permanently tie two softmax
    weights, breaking the deterministic tie-break semantics downstream.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValidationError(f"points must be 2-d (n x d), got shape {pts.shape}")
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argwhere(~np.isfinite(pts).all(axis=1))[0][0])
            raise ValidationError(f"non-finite coordinate in row {bad}")
        if n > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt((diff**2).sum(-1))
            dist[np.arange(n), np.arange(n)] = np.inf
            i, j = np.unravel_index(int(np.argmin(dist)), dist.shape)
            if dist[i, j] <= DUPLICATE_TOL:
                raise ValidationError(
                    f"duplicate anchors: rows {min(i, j)} and {max(i, j)} coincide "
                    f"(distance {dist[i, j]:.3e} <= {DUPLICATE_TOL})"
                )
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (n,):
                raise ValidationError(f"labels must have shape ({n},), got {lab.shape}")
            lab = lab.copy()
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def max_norm(self) -> float:
        return float(np.sqrt((self.points**2).sum(axis=1)).max())


def load_csv(path, header: bool = False, id: str = "") -> TrainingSet:
    """Read comma-separated anchor rows into a TrainingSet.

    Errors name the offending 1-based file row.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValidationError(
                    f"{path}: row {lineno} has {len(cells)} columns, expected {width}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ValidationError(f"{path}: row {lineno} has a non-numeric cell") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows (need n >= 1)")
    return TrainingSet(points=np.asarray(rows, dtype=np.float64), id=id or str(path))


def save_csv(ts: TrainingSet, path) -> None:
    """Write anchors in shortest round-trip decimal so a reload is bit-exact."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in ts.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def uniform_toy(n: int, d: int, seed: int, scale: float = 1.0, offset=0.0) -> TrainingSet:
    """n i.i.d. points uniform on scale*[0,1]^d + offset, reproducible by seed."""
    if n < 1 or d < 1:
        raise ValidationError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, d)) * scale + np.asarray(offset, dtype=float)
    return TrainingSet(points=pts, id=f"uniform_toy(n={n},d={d},seed={seed})")
