"""Exact fields for a finite training set under a Gaussian far side.

With anchors {X_i} and rho_1 = N(0, I_d), the time-t marginal of the
interpolation is the mixture (1/n) sum_i N(alpha(t) X_i, C3(t) I_d).  All
quantities below are exact consequences of that mixture:

    weights   w_i(z,t)  = softmax_i( -||z - alpha X_i||^2 / (2 C3) )
    velocity  b(z,t)    = sum_i w_i (C1 z - C2 X_i) / C3
    score     s(z,t)    = (alpha / B) b(z,t) - (alpha' / B) z
                        = sum_i w_i (alpha X_i - z) / C3        (identity)
    density   log rho_t = logsumexp_i(...) - log n - (d/2) log(2 pi C3)

All weight arithmetic stays in the log domain with max-subtraction; raw
distances are never exponentiated, so nothing overflows even when C3 -> 0
makes individual exponents astronomically large.

The two-sided field (both ends empirical, {X_i} and {Y_j}) replaces the
softmax over anchors by a softmax over all n*m anchor pairs with bandwidth
gamma^2 instead of C3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import TrainingSet
from .exceptions import (
    NotApplicableError,
    NumericError,
    SingularScoreError,
    SingularTimeError,
)
from .schedules import Coeffs, Schedule, coeffs

__all__ = [
    "Weights",
    "FieldValue",
    "log_weights",
    "velocity",
    "score",
    "log_density",
    "velocity_two_sided",
    "SCORE_B_EPS",
]

SCORE_B_EPS = 1e-14


@dataclass(frozen=True)
class Weights:
    """Softmax anchor weights at one (z, t).

    log_w has length n (or n*m flattened row-major for the two-sided field).
    argmax is the smallest index attaining the maximum weight.
    """

    log_w: np.ndarray
    w: np.ndarray
    argmax: int


@dataclass(frozen=True)
class FieldValue:
    """A d-dimensional field evaluation with its weights, for traceability."""

    vector: np.ndarray
    weights: Weights
    t: float
    z: np.ndarray


def _check_z(z, d: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != d:
        raise NumericError(f"z has dimension {z.shape[0]}, training set has d={d}")
    if not np.all(np.isfinite(z)):
        raise NumericError("z has non-finite components")
    return z


def batch_logits(Z: np.ndarray, alpha: float, c3: float, X: np.ndarray) -> np.ndarray:
    """(m, n) log-kernel matrix -||Z_k - alpha X_i||^2 / (2 C3)."""
    diff = Z[:, None, :] - alpha * X[None, :, :]
    return -(diff * diff).sum(axis=2) / (2.0 * c3)


def batch_weights(logits: np.ndarray):
    """Row-wise softmax in the log domain; returns (w, logsumexp)."""
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    ssum = e.sum(axis=1, keepdims=True)
    lse = (m + np.log(ssum))[:, 0]
    return e / ssum, lse


def batch_velocity(Z: np.ndarray, X: np.ndarray, alpha: float, c: Coeffs) -> np.ndarray:
    """Vectorized velocity over a batch of states (m, d)."""
    w, _ = batch_weights(batch_logits(Z, alpha, c.c3, X))
    xbar = np.einsum("mn,nd->md", w, X)
    return (c.c1 * Z - c.c2 * xbar) / c.c3


def batch_score(Z: np.ndarray, X: np.ndarray, alpha: float, c: Coeffs) -> np.ndarray:
    """Vectorized score over a batch of states (m, d), mixture-gradient form."""
    w, _ = batch_weights(batch_logits(Z, alpha, c.c3, X))
    xbar = np.einsum("mn,nd->md", w, X)
    return (alpha * xbar - Z) / c.c3


def log_weights(z, t: float, X: TrainingSet, s: Schedule) -> Weights:
    """Softmax anchor weights at one point, log-domain stable."""
    c = coeffs(s, t)
    z = _check_z(z, X.d)
    logits = batch_logits(z[None, :], float(s.alpha(t)), c.c3, X.points)[0]
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    log_w = logits - lse
    w = np.exp(log_w)
    return Weights(log_w=log_w, w=w, argmax=int(np.argmax(w)))


def velocity(z, t: float, X: TrainingSet, s: Schedule) -> FieldValue:
    """Optimal velocity b(z, t) = sum_i w_i (C1 z - C2 X_i) / C3."""
    c = coeffs(s, t)
    z = _check_z(z, X.d)
    wts = log_weights(z, t, X, s)
    xbar = wts.w @ X.points
    vec = (c.c1 * z - c.c2 * xbar) / c.c3
    return FieldValue(vector=vec, weights=wts, t=t, z=z)


def score(z, t: float, X: TrainingSet, s: Schedule) -> FieldValue:
    """Optimal score s(z, t) = (alpha/B) b(z, t) - (alpha'/B) z.

    Raises when |B(t)| < SCORE_B_EPS: the expression is genuinely singular
    there (B vanishes at t = 1 for some schedules) and samplers are expected
    to avoid such grid times by construction.
    """
    if not 0.0 < t <= 1.0:
        raise SingularTimeError(f"score needs t in (0, 1], got {t}")
    c = coeffs(s, t)
    if abs(c.b) < SCORE_B_EPS:
        raise SingularScoreError(f"B(t)={c.b:.3e} vanishes at t={t}")
    z = _check_z(z, X.d)
    bval = velocity(z, t, X, s)
    a = float(s.alpha(t))
    ad = float(s.alpha_dot(t))
    vec = (a / c.b) * bval.vector - (ad / c.b) * z
    return FieldValue(vector=vec, weights=bval.weights, t=t, z=z)


def log_density(z, t: float, X: TrainingSet, s: Schedule) -> float:
    """log rho_t(z) of the exact Gaussian-mixture marginal."""
    c = coeffs(s, t)
    z = _check_z(z, X.d)
    logits = batch_logits(z[None, :], float(s.alpha(t)), c.c3, X.points)[0]
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    return float(lse - np.log(X.n) - 0.5 * X.d * np.log(2.0 * np.pi * c.c3))


def batch_two_sided_velocity(
    Z: np.ndarray, X: np.ndarray, Y: np.ndarray, t: float, s: Schedule
) -> np.ndarray:
    """Vectorized two-sided velocity over (m, d) states; gamma(t) > 0 required."""
    a = float(s.alpha(t))
    ad = float(s.alpha_dot(t))
    b = float(s.beta(t))
    bd = float(s.beta_dot(t))
    g = float(s.gamma(t))
    gd = float(s.gamma_dot(t))
    r = gd / g
    disp = Z[:, None, None, :] - a * X[None, :, None, :] - b * Y[None, None, :, :]
    logits = -(disp * disp).sum(axis=3) / (2.0 * g * g)
    flat = logits.reshape(Z.shape[0], -1)
    m = flat.max(axis=1, keepdims=True)
    e = np.exp(flat - m)
    w = (e / e.sum(axis=1, keepdims=True)).reshape(logits.shape)
    cx = ad - r * a
    cy = bd - r * b
    pair_term = np.einsum("kij,id->kd", w, cx * X) + np.einsum("kij,jd->kd", w, cy * Y)
    return r * Z + pair_term


def velocity_two_sided(z, t: float, X: TrainingSet, Y: TrainingSet, s: Schedule) -> FieldValue:
    """Optimal velocity when both ends are empirical sets of anchors.

    b2(z,t) = (g'/g) z + sum_{ij} w_ij [ (a' - (g'/g) a) X_i + (b' - (g'/g) b) Y_j ]
    with w_ij the softmax of -||z - a X_i - b Y_j||^2 / (2 g^2) over all pairs.
    """
    if not 0.0 < t < 1.0:
        raise SingularTimeError(f"two-sided velocity needs t in (0, 1), got {t}")
    if X.d != Y.d:
        raise NotApplicableError(f"X has d={X.d} but Y has d={Y.d}")
    g = float(s.gamma(t))
    if g <= 0.0:
        raise NotApplicableError(
            "two-sided velocity requires gamma(t) > 0 on (0, 1); "
            f"schedule {s.kind!r} has gamma({t})={g}"
        )
    z = _check_z(z, X.d)
    a = float(s.alpha(t))
    b = float(s.beta(t))
    disp = z[None, None, :] - a * X.points[:, None, :] - b * Y.points[None, :, :]
    logits = (-(disp * disp).sum(axis=2) / (2.0 * g * g)).reshape(-1)
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    log_w = logits - lse
    w = np.exp(log_w)
    wts = Weights(log_w=log_w, w=w, argmax=int(np.argmax(w)))
    vec = batch_two_sided_velocity(z[None, :], X.points, Y.points, t, s)[0]
    return FieldValue(vector=vec, weights=wts, t=t, z=z)
