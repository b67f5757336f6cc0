"""Euler integration of the generation dynamics, batched and reproducible.

Deterministic generation follows dZ = b dt from t = 1 down to t_end on the
uniform grid t_k = 1 - k (1 - t_end) / N with the explicit update

    Z_{t_{k+1}} = Z_{t_k} - b(Z_{t_k}, t_k) h,          h = (1 - t_end) / N.

Stochastic generation adds the score drift and a Brownian kick per step,

    Z_{t_{k+1}} = Z_{t_k} - [b - zeta s](Z_{t_k}, t_k) h + sqrt(2 zeta(t_k) h) xi_k.

Randomness is counter-based: trajectory k owns the substream
default_rng([master_seed, k]) from which it draws its start (when requested)
and then its per-step normals, so batches are bit-identical regardless of
chunking, ordering, or thread count.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import TrainingSet
from .exceptions import SingularScoreError, ValidationError
from .fields import SCORE_B_EPS, batch_logits, batch_two_sided_velocity, batch_weights
from .schedules import Schedule, coeffs_arrays

__all__ = [
    "DRAW",
    "TO_X",
    "TO_Y",
    "SamplerConfig",
    "Trajectory",
    "sample_deterministic",
    "sample_stochastic",
    "sample_batch",
    "sample_two_sided",
    "sample_two_sided_batch",
]

DRAW = "draw"
TO_X = "to_x"
TO_Y = "to_y"

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class SamplerConfig:
    """Integration grid, mode, and reproducibility knobs."""

    steps: int = 2000
    t_end: float = 1e-3
    mode: str = "deterministic"
    record_trajectory: bool = False
    master_seed: int = 0

    def __post_init__(self):
        if self.steps < 2:
            raise ValidationError(f"steps must be >= 2, got {self.steps}")
        if not 0.0 < self.t_end < 0.5:
            raise ValidationError(f"t_end must lie in (0, 0.5), got {self.t_end}")
        if self.mode not in ("deterministic", "stochastic"):
            raise ValidationError(f"mode must be deterministic|stochastic, got {self.mode!r}")

    def grid(self) -> np.ndarray:
        ts = 1.0 - np.arange(self.steps + 1) * ((1.0 - self.t_end) / self.steps)
        ts[-1] = self.t_end
        return ts


@dataclass
class Trajectory:
    """One integration run: grid times, visited states, endpoint, provenance.

    For a diverged run the arrays are truncated at the flagged step and
    ``diverged`` is set; the endpoint is the last finite state.
    """

    times: np.ndarray
    states: np.ndarray | None
    endpoint: np.ndarray
    seed: int
    provenance: dict = field(default_factory=dict)
    diverged: bool = False
    diverged_step: int | None = None
    eps_norms: np.ndarray | None = None
    eps_clipped: np.ndarray | None = None


class _ErrorHook:
    """Adapter the error module plugs into the engine.

    ``magnitudes(step, t, Z, lse)`` returns per-trajectory error norms (and a
    clipped mask) given the already-computed mixture log-sum-exp; ``direction``
    is a unit vector per step shared across the batch.
    """

    def magnitudes(self, step: int, t: float, Z: np.ndarray, lse: np.ndarray):
        raise NotImplementedError

    def direction(self, step: int) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _integrate_chunk(
    starts: np.ndarray,
    X: TrainingSet,
    s: Schedule,
    cfg: SamplerConfig,
    noise: np.ndarray | None,
    error_hook: _ErrorHook | None,
):
    """Euler-integrate a chunk of trajectories; returns per-chunk arrays."""
    ts = cfg.grid()
    N = cfg.steps
    h = (1.0 - cfg.t_end) / N
    c1s, c2s, c3s, bs = coeffs_arrays(s, ts)
    alphas = np.asarray(s.alpha(ts), dtype=float)
    zetas = np.asarray(s.zeta(ts), dtype=float)
    if cfg.mode == "stochastic":
        bad = (np.abs(bs[:-1]) < SCORE_B_EPS) & (zetas[:-1] > 0.0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularScoreError(
                f"stochastic sampling needs B(t) != 0 on the grid; |B({ts[k]:.6g})| < {SCORE_B_EPS}"
            )

    m, d = starts.shape
    Z = starts.astype(np.float64, copy=True)
    guard = DIVERGENCE_FACTOR * (1.0 + X.max_norm())
    alive = np.ones(m, dtype=bool)
    div_step = np.full(m, -1, dtype=np.int64)
    states = np.empty((m, N + 1, d)) if cfg.record_trajectory else None
    if states is not None:
        states[:, 0, :] = Z
    eps_norms = np.zeros((m, N)) if (cfg.record_trajectory and error_hook) else None
    eps_clip = np.zeros((m, N), dtype=bool) if (cfg.record_trajectory and error_hook) else None

    Xp = X.points
    for k in range(N):
        t = ts[k]
        c1, c2, c3 = c1s[k], c2s[k], c3s[k]
        a = alphas[k]
        w, lse = batch_weights(batch_logits(Z, a, c3, Xp))
        # einsum keeps row results bit-identical across batch shapes, unlike
        # the BLAS-dispatched matmul (gemv vs gemm differ in the last ulp)
        xbar = np.einsum("mn,nd->md", w, Xp)
        drift = (c1 * Z - c2 * xbar) / c3
        zeta = zetas[k]
        if cfg.mode == "stochastic" and zeta > 0.0:
            score = (a * xbar - Z) / c3
            drift = drift - zeta * score
        if error_hook is not None:
            mag, clipped = error_hook.magnitudes(k, t, Z, lse)
            drift = drift + mag[:, None] * error_hook.direction(k)[None, :]
            if eps_norms is not None:
                eps_norms[:, k] = mag
                eps_clip[:, k] = clipped
        Znew = Z - drift * h
        if cfg.mode == "stochastic" and zeta > 0.0:
            Znew = Znew + np.sqrt(2.0 * zeta * h) * noise[:, k, :]
        crossed = alive & (
            ~np.all(np.isfinite(Znew), axis=1) | (np.sqrt((Znew**2).sum(axis=1)) > guard)
        )
        if np.any(crossed):
            div_step[crossed] = k
            alive &= ~crossed
        Z = np.where(alive[:, None], Znew, Z)
        if states is not None:
            states[:, k + 1, :] = Z
    return Z, states, alive, div_step, eps_norms, eps_clip


def _provenance(s: Schedule, cfg: SamplerConfig, error_desc: dict | None) -> dict:
    return {
        "schedule": s.label(),
        "mode": cfg.mode,
        "error_model": error_desc,
    }


def _make_trajectory(
    idx, cfg, ts, endpoint, states, alive, div_step, eps_norms, eps_clip, prov
) -> Trajectory:
    diverged = not alive
    stop = int(div_step) if diverged else cfg.steps
    tr_states = None
    tr_eps = tr_clip = None
    if states is not None:
        tr_states = states[: stop + 1].copy()
        if eps_norms is not None:
            tr_eps = eps_norms[:stop].copy()
            tr_clip = eps_clip[:stop].copy()
    return Trajectory(
        times=ts[: stop + 1].copy(),
        states=tr_states,
        endpoint=endpoint.copy(),
        seed=idx,
        provenance=dict(prov),
        diverged=diverged,
        diverged_step=int(div_step) if diverged else None,
        eps_norms=tr_eps,
        eps_clipped=tr_clip,
    )


def _resolve_starts(cfg: SamplerConfig, d: int, indices: Sequence[int], start):
    """Per-trajectory starts and (for stochastic mode) pre-drawn noise blocks.

    Each trajectory consumes its substream in a fixed order (start first,
    then step noise), so outputs do not depend on chunking.
    """
    m = len(indices)
    starts = np.empty((m, d))
    noise = np.empty((m, cfg.steps, d)) if cfg.mode == "stochastic" else None
    for row, idx in enumerate(indices):
        rng = np.random.default_rng([cfg.master_seed, idx])
        if isinstance(start, str) and start == DRAW:
            starts[row] = rng.standard_normal(d)
        else:
            starts[row] = np.asarray(start, dtype=float).reshape(d)
        if noise is not None:
            noise[row] = rng.standard_normal((cfg.steps, d))
    return starts, noise


def _run_indices(cfg, X, s, indices, start, error_hook):
    starts, noise = _resolve_starts(cfg, X.d, indices, start)
    return _integrate_chunk(starts, X, s, cfg, noise, error_hook)


def sample_deterministic(
    cfg: SamplerConfig, X: TrainingSet, s: Schedule, start=DRAW
) -> Trajectory:
    """Integrate the velocity-field ODE for one trajectory (substream 0)."""
    if cfg.mode != "deterministic":
        raise ValidationError("sample_deterministic requires cfg.mode='deterministic'")
    return _sample_single(cfg, X, s, start, None)


def sample_stochastic(
    cfg: SamplerConfig, X: TrainingSet, s: Schedule, start=DRAW
) -> Trajectory:
    """Integrate the SDE for one trajectory (substream 0)."""
    if cfg.mode != "stochastic":
        raise ValidationError("sample_stochastic requires cfg.mode='stochastic'")
    return _sample_single(cfg, X, s, start, None)


def _sample_single(cfg, X, s, start, error_hook) -> Trajectory:
    Z, states, alive, div_step, eps_n, eps_c = _run_indices(
        cfg, X, s, [0], start, error_hook
    )
    prov = _provenance(s, cfg, error_hook.describe() if error_hook else None)
    return _make_trajectory(
        0,
        cfg,
        cfg.grid(),
        Z[0],
        states[0] if states is not None else None,
        alive[0],
        div_step[0],
        eps_n[0] if eps_n is not None else None,
        eps_c[0] if eps_c is not None else None,
        prov,
    )


def _auto_chunk(cfg: SamplerConfig, d: int) -> int:
    if cfg.mode == "stochastic" or cfg.record_trajectory:
        # cap per-chunk scratch (noise or recorded states) near 64 MB
        per_traj = (cfg.steps + 1) * d * 8
        return max(1, min(512, (64 << 20) // max(per_traj, 1)))
    return 512


def sample_batch(
    cfg: SamplerConfig,
    X: TrainingSet,
    s: Schedule,
    count: int,
    start=DRAW,
    error_hook: _ErrorHook | None = None,
    threads: int = 1,
    chunk_size: int | None = None,
) -> list[Trajectory]:
    """Run ``count`` trajectories on substreams (master_seed, 0..count-1).

    Per-trajectory divergence is reported via flags; the batch never aborts.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    chunk = chunk_size or _auto_chunk(cfg, X.d)
    ts = cfg.grid()
    prov = _provenance(s, cfg, error_hook.describe() if error_hook else None)
    chunks = [list(range(lo, min(lo + chunk, count))) for lo in range(0, count, chunk)]

    def work(indices):
        return _run_indices(cfg, X, s, indices, start, error_hook)

    if threads > 1 and len(chunks) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    out: list[Trajectory] = []
    for indices, (Z, states, alive, div_step, eps_n, eps_c) in zip(chunks, results):
        for row, idx in enumerate(indices):
            out.append(
                _make_trajectory(
                    idx,
                    cfg,
                    ts,
                    Z[row],
                    states[row] if states is not None else None,
                    alive[row],
                    div_step[row],
                    eps_n[row] if eps_n is not None else None,
                    eps_c[row] if eps_c is not None else None,
                    prov,
                )
            )
    return out


def sample_two_sided_batch(
    cfg: SamplerConfig,
    X: TrainingSet,
    Y: TrainingSet,
    s: Schedule,
    direction: str,
    starts: np.ndarray,
) -> list[Trajectory]:
    """Integrate the two-sided ODE for a batch of explicit starts.

    TO_X runs t from 1 - t_end down to t_end (endpoints approach {X_i});
    TO_Y runs t from t_end up to 1 - t_end (endpoints approach {Y_j}).
    """
    if direction not in (TO_X, TO_Y):
        raise ValidationError(f"direction must be TO_X or TO_Y, got {direction!r}")
    probe = np.asarray(s.gamma(np.linspace(0.1, 0.9, 9)), dtype=float)
    if np.any(probe <= 0.0):
        raise ValidationError(
            f"two-sided sampling requires gamma > 0 on (0, 1); schedule {s.kind!r} fails"
        )
    starts = np.asarray(starts, dtype=np.float64).reshape(-1, X.d)
    m = starts.shape[0]
    N = cfg.steps
    lo, hi = cfg.t_end, 1.0 - cfg.t_end
    if direction == TO_X:
        ts = hi - np.arange(N + 1) * ((hi - lo) / N)
        ts[-1] = lo
    else:
        ts = lo + np.arange(N + 1) * ((hi - lo) / N)
        ts[-1] = hi

    Z = starts.copy()
    guard = DIVERGENCE_FACTOR * (1.0 + max(X.max_norm(), Y.max_norm()))
    alive = np.ones(m, dtype=bool)
    div_step = np.full(m, -1, dtype=np.int64)
    states = np.empty((m, N + 1, X.d)) if cfg.record_trajectory else None
    if states is not None:
        states[:, 0, :] = Z
    for k in range(N):
        h = ts[k + 1] - ts[k]  # signed
        vel = batch_two_sided_velocity(Z, X.points, Y.points, float(ts[k]), s)
        Znew = Z + vel * h
        crossed = alive & (
            ~np.all(np.isfinite(Znew), axis=1) | (np.sqrt((Znew**2).sum(axis=1)) > guard)
        )
        if np.any(crossed):
            div_step[crossed] = k
            alive &= ~crossed
        Z = np.where(alive[:, None], Znew, Z)
        if states is not None:
            states[:, k + 1, :] = Z
    prov = {
        "schedule": s.label(),
        "mode": f"two-sided:{direction}",
        "error_model": None,
    }
    out = []
    for row in range(m):
        out.append(
            _make_trajectory(
                row,
                cfg,
                ts,
                Z[row],
                states[row] if states is not None else None,
                alive[row],
                div_step[row],
                None,
                None,
                prov,
            )
        )
    return out


def sample_two_sided(
    cfg: SamplerConfig,
    X: TrainingSet,
    Y: TrainingSet,
    s: Schedule,
    direction: str,
    start,
) -> Trajectory:
    """One two-sided trajectory from an explicit start (no Gaussian end exists)."""
    if isinstance(start, str):
        raise ValidationError("two-sided sampling needs an explicit start vector")
    return sample_two_sided_batch(cfg, X, Y, s, direction, np.asarray(start))[0]
