"""Injected estimation-error families and the erroneous-field sampler.

The sampler integrates b_hat = b + eps where eps(z, t) has a prescribed norm
and a direction policy:

    bounded           ||eps|| = sqrt(lambda)            (norm^2 bounded by lambda)
    gamma-scaled      ||eps|| = sqrt(lambda) / gamma(t)
    density-inverse   ||eps|| = lambda / sum_j exp(-||z - alpha X_j||^2 / (2 C3))

The density-inverse magnitude is computed from the log-sum-exp of the weight
logits, so it is exact even when every exponent underflows; it explodes where
the mixture density is small, which is what drives the underfitting runaway.

Directions are unit vectors, either fixed or drawn per step from a
counter-based substream keyed by (seed, step_index): the direction at step k
is a pure function of those two integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import TrainingSet
from .exceptions import NotApplicableError, SingularTimeError, ValidationError
from .fields import batch_logits, batch_weights
from .samplers import SamplerConfig, Trajectory, _ErrorHook, _sample_single, sample_batch
from .schedules import (
    REGIME_DIVERGES,
    REGIME_FINITE,
    REGIME_VANISHES,
    Schedule,
    coeffs,
    regime_limit,
)

__all__ = [
    "BOUNDED",
    "GAMMA_SCALED",
    "DENSITY_INVERSE",
    "ErrorModel",
    "EpsilonValue",
    "direction_for_step",
    "epsilon",
    "sample_with_error",
    "sample_batch_with_error",
    "regime_report",
]

BOUNDED = "bounded"
GAMMA_SCALED = "gamma-scaled"
DENSITY_INVERSE = "density-inverse"

_FAMILIES = (BOUNDED, GAMMA_SCALED, DENSITY_INVERSE)


@dataclass(frozen=True)
class ErrorModel:
    """Immutable specification of the injected error eps(z, t)."""

    family: str
    lam: float
    direction: str = "random"
    fixed_direction: tuple[float, ...] | None = None
    seed: int = 0
    clip: float = 1e12

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValidationError(f"unknown error family {self.family!r}; one of {_FAMILIES}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValidationError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.direction not in ("random", "fixed"):
            raise ValidationError(f"direction must be random|fixed, got {self.direction!r}")
        if self.direction == "fixed":
            if self.fixed_direction is None:
                raise ValidationError("fixed direction policy needs fixed_direction")
            v = np.asarray(self.fixed_direction, dtype=float)
            nrm = float(np.sqrt((v**2).sum()))
            if nrm <= 0 or not math.isfinite(nrm):
                raise ValidationError("fixed_direction must be a nonzero finite vector")
            object.__setattr__(self, "fixed_direction", tuple(v / nrm))
        if not self.clip > 0:
            raise ValidationError(f"clip must be positive, got {self.clip}")

    def describe(self) -> dict:
        return {
            "family": self.family,
            "lambda": self.lam,
            "direction": self.direction,
            "fixed_direction": self.fixed_direction,
            "seed": self.seed,
            "clip": self.clip,
        }


@dataclass(frozen=True)
class EpsilonValue:
    """One error evaluation: the vector and whether the clip engaged."""

    vector: np.ndarray
    clipped: bool


def direction_for_step(seed: int, step_index: int, d: int) -> np.ndarray:
    """Unit direction for one step: a pure function of (seed, step_index)."""
    rng = np.random.default_rng([seed, step_index])
    v = rng.standard_normal(d)
    return v / np.sqrt((v**2).sum())


def _direction_table(model: ErrorModel, n_steps: int, d: int) -> np.ndarray:
    if model.direction == "fixed":
        return np.tile(np.asarray(model.fixed_direction, dtype=float), (n_steps, 1))
    return np.stack([direction_for_step(model.seed, k, d) for k in range(n_steps)])


def _magnitude(model: ErrorModel, lse: np.ndarray, t: float, s: Schedule):
    """Per-sample error norms given the mixture log-sum-exp; returns (mag, clipped)."""
    if model.family == BOUNDED:
        mag = np.full_like(lse, math.sqrt(model.lam))
    elif model.family == GAMMA_SCALED:
        g = float(s.gamma(t))
        if g <= 0.0:
            raise NotApplicableError(f"gamma({t})=0: gamma-scaled error undefined")
        mag = np.full_like(lse, math.sqrt(model.lam) / g)
    else:  # DENSITY_INVERSE: lam / sum_j exp(logit_j), in log domain
        if model.lam == 0.0:
            return np.zeros_like(lse), np.zeros_like(lse, dtype=bool)
        with np.errstate(over="ignore"):
            mag = np.exp(math.log(model.lam) - lse)
    clipped = mag > model.clip
    if np.any(clipped):
        mag = np.minimum(mag, model.clip)
    return mag, clipped


def epsilon(
    model: ErrorModel,
    z,
    t: float,
    X: TrainingSet,
    s: Schedule,
    step_index: int = 0,
) -> EpsilonValue:
    """Evaluate eps(z, t) = magnitude(family, z, t) * direction(policy, step)."""
    if not 0.0 < t <= 1.0:
        raise SingularTimeError(f"epsilon needs t in (0, 1], got {t}")
    z = np.asarray(z, dtype=float).reshape(1, X.d)
    c = coeffs(s, t)
    _, lse = batch_weights(batch_logits(z, float(s.alpha(t)), c.c3, X.points))
    mag, clipped = _magnitude(model, lse, t, s)
    if model.direction == "fixed":
        u = np.asarray(model.fixed_direction, dtype=float)
    else:
        u = direction_for_step(model.seed, step_index, X.d)
    return EpsilonValue(vector=mag[0] * u, clipped=bool(clipped[0]))


class _ModelHook(_ErrorHook):
    """Engine adapter: direction table precomputed, magnitudes reuse the
    engine's log-sum-exp.

    gamma-scaled errors are suppressed (set to zero) at grid times where
    gamma(t) = 0 — the only such time on a sampler grid is t = 1, where the
    1/gamma bound is vacuous.
    """

    def __init__(self, model: ErrorModel, s: Schedule, n_steps: int, d: int):
        self.model = model
        self.s = s
        self.table = _direction_table(model, n_steps, d)

    def magnitudes(self, step: int, t: float, Z: np.ndarray, lse: np.ndarray):
        if self.model.family == GAMMA_SCALED and float(self.s.gamma(t)) <= 0.0:
            return np.zeros(Z.shape[0]), np.zeros(Z.shape[0], dtype=bool)
        return _magnitude(self.model, lse, t, self.s)

    def direction(self, step: int) -> np.ndarray:
        return self.table[step]

    def describe(self) -> dict:
        return self.model.describe()


def sample_with_error(
    cfg: SamplerConfig,
    model: ErrorModel,
    X: TrainingSet,
    s: Schedule,
    start="draw",
) -> Trajectory:
    """Deterministic Euler run with b_hat = b + eps (substream 0)."""
    if cfg.mode != "deterministic":
        raise ValidationError("error-injected sampling is defined for deterministic mode")
    hook = _ModelHook(model, s, cfg.steps, X.d)
    return _sample_single(cfg, X, s, start, hook)


def sample_batch_with_error(
    cfg: SamplerConfig,
    model: ErrorModel,
    X: TrainingSet,
    s: Schedule,
    count: int,
    start="draw",
    threads: int = 1,
) -> list[Trajectory]:
    """Batch variant of sample_with_error on substreams (master_seed, k)."""
    if cfg.mode != "deterministic":
        raise ValidationError("error-injected sampling is defined for deterministic mode")
    hook = _ModelHook(model, s, cfg.steps, X.d)
    return sample_batch(cfg, X, s, count, start=start, error_hook=hook, threads=threads)


_REGIME_TO_OUTCOME = {
    REGIME_VANISHES: "converges to training set",
    REGIME_FINITE: "vicinity",
    REGIME_DIVERGES: "diverges",
}


def regime_report(model: ErrorModel, s: Schedule) -> str:
    """Predicted endpoint regime for a gamma-scaled error model."""
    if model.family != GAMMA_SCALED:
        raise NotApplicableError("regime_report applies to gamma-scaled errors only")
    return _REGIME_TO_OUTCOME[regime_limit(s)]
