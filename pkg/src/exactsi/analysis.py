"""Endpoint metrics, the memorization criterion, and independent oracles.

The two oracles here deliberately avoid the closed-form field expressions:
``fd_score_oracle`` differentiates the mixture log-density numerically, and
``mc_velocity_oracle`` evaluates the defining conditional expectation
E[alpha' Z0 + beta' Z1 + gamma' eta | Z_t = z] by enumerating anchors and
integrating the free Gaussian variable with Gauss-Hermite quadrature.  Both
exist so the field implementations can be checked against something that does
not share their algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import TrainingSet
from .exceptions import (
    InsufficientDataError,
    NotApplicableError,
    ValidationError,
)
from .fields import log_density
from .samplers import Trajectory
from .schedules import Schedule

__all__ = [
    "CONVERGED",
    "VICINITY",
    "DIVERGED",
    "NNResult",
    "MemorizationReport",
    "nearest_neighbor",
    "memorization_test",
    "classify_endpoints",
    "residual_variance",
    "monotone_divergence",
    "mc_velocity_oracle",
    "fd_score_oracle",
    "MEMORIZATION_THRESHOLD",
]

CONVERGED = "CONVERGED"
VICINITY = "VICINITY"
DIVERGED = "DIVERGED"

MEMORIZATION_THRESHOLD = 1.0 / 3.0


@dataclass(frozen=True)
class NNResult:
    """Nearest and second-nearest anchor of one point (ties to smaller index)."""

    index1: int
    d1: float
    index2: int | None
    d2: float | None


@dataclass
class MemorizationReport:
    """Per-sample nearest-neighbor stats plus aggregate classification."""

    nn: list[NNResult]
    memorized: np.ndarray
    memorized_fraction: float
    threshold: float
    classes: list[str] | None = None
    class_indices: list[int | None] | None = None
    sigma2_hat: float | None = None
    sample_count: int = 0


def _dists_to_anchors(Z: np.ndarray, X: TrainingSet) -> np.ndarray:
    return np.sqrt(((Z[:, None, :] - X.points[None, :, :]) ** 2).sum(-1))


def nearest_neighbor(z, X: TrainingSet) -> NNResult:
    """Exact linear scan for the two closest anchors."""
    if X.n < 1:
        raise ValidationError("empty training set")
    z = np.asarray(z, dtype=float).reshape(1, X.d)
    d = _dists_to_anchors(z, X)[0]
    i1 = int(np.argmin(d))
    if X.n == 1:
        return NNResult(index1=i1, d1=float(d[i1]), index2=None, d2=None)
    d2 = d.copy()
    d2[i1] = np.inf
    i2 = int(np.argmin(d2))
    return NNResult(index1=i1, d1=float(d[i1]), index2=i2, d2=float(d[i2]))


def memorization_test(
    samples, X: TrainingSet, threshold: float = MEMORIZATION_THRESHOLD
) -> MemorizationReport:
    """Flag each sample whose squared nearest/second-nearest distance ratio
    is at most ``threshold`` (boundary inclusive)."""
    if X.n < 2:
        raise ValidationError("memorization test needs at least two anchors")
    Z = np.asarray(samples, dtype=float).reshape(-1, X.d)
    nn = [nearest_neighbor(z, X) for z in Z]
    ratios = np.array([r.d1**2 / r.d2**2 if r.d2 > 0 else np.inf for r in nn])
    flags = ratios <= threshold
    return MemorizationReport(
        nn=nn,
        memorized=flags,
        memorized_fraction=float(flags.mean()),
        threshold=threshold,
        sample_count=len(nn),
    )


def classify_endpoints(
    trajectories: list[Trajectory],
    X: TrainingSet,
    tol_conv: float = 1e-2,
    r_div: float | None = None,
):
    """Partition runs into CONVERGED(i) / VICINITY / DIVERGED.

    DIVERGED: the integration flagged divergence or the endpoint norm exceeds
    r_div (default 10 * (1 + max anchor norm)).  CONVERGED(i): the endpoint is
    within tol_conv of anchor i.  Everything else is VICINITY.
    """
    if r_div is None:
        r_div = 10.0 * (1.0 + X.max_norm())
    classes: list[str] = []
    indices: list[int | None] = []
    for tr in trajectories:
        if tr.diverged or float(np.sqrt((tr.endpoint**2).sum())) > r_div:
            classes.append(DIVERGED)
            indices.append(None)
            continue
        nn = nearest_neighbor(tr.endpoint, X)
        if nn.d1 <= tol_conv:
            classes.append(CONVERGED)
            indices.append(nn.index1)
        else:
            classes.append(VICINITY)
            indices.append(None)
    return classes, indices


def residual_variance(samples, X: TrainingSet):
    """Pooled per-coordinate variance of (sample - nearest anchor).

    Returns (sigma2_hat, per-coordinate means, anchor assignments).
    """
    Z = np.asarray(samples, dtype=float).reshape(-1, X.d)
    if Z.shape[0] < 30:
        raise InsufficientDataError(
            f"residual variance needs >= 30 samples, got {Z.shape[0]}"
        )
    d = _dists_to_anchors(Z, X)
    assign = d.argmin(axis=1)
    resid = Z - X.points[assign]
    sigma2 = float(resid.reshape(-1).var(ddof=1))
    return sigma2, resid.mean(axis=0), assign


def monotone_divergence(trajectory: Trajectory, X: TrainingSet) -> bool:
    """True iff every recorded step strictly increases the squared distance
    to every anchor (up to the divergence guard, if it fired)."""
    if trajectory.states is None:
        raise ValidationError("monotone_divergence needs a recorded trajectory")
    S = trajectory.states
    d2 = ((S[:, None, :] - X.points[None, :, :]) ** 2).sum(-1)  # (steps+1, n)
    return bool(np.all(d2[1:] > d2[:-1]))


def mc_velocity_oracle(
    z: float, t: float, X: TrainingSet, s: Schedule, nodes: int = 128
) -> float:
    """Quadrature evaluation of the defining conditional expectation (1-D).

    Enumerates the anchors; for each one, conditioning on Z_t = z leaves a
    single free Gaussian z1 (eta is determined by the linear constraint), and
    the z1 integral is taken with Gauss-Hermite nodes against the N(0, 1)
    prior.  Anchor x node log-kernels are normalized jointly with one
    max-subtraction, so the oracle stays finite arbitrarily far from the
    anchors.  No derived coefficient (C1, C2, C3, B) appears anywhere.
    """
    if X.d != 1:
        raise NotApplicableError("the quadrature oracle is one-dimensional")
    if not 0.0 < t < 1.0:
        raise NotApplicableError(f"oracle needs t in (0, 1), got {t}")
    a = float(s.alpha(t))
    ad = float(s.alpha_dot(t))
    b = float(s.beta(t))
    bd = float(s.beta_dot(t))
    g = float(s.gamma(t))
    gd = float(s.gamma_dot(t)) if g > 0 else 0.0
    anchors = X.points[:, 0]
    resid = float(z) - a * anchors  # (n,)
    if g > 0.0:
        x, w = np.polynomial.hermite.hermgauss(nodes)
        z1 = math.sqrt(2.0) * x  # nodes for the N(0,1) prior
        # eta-density log-kernel per (anchor, node)
        dev = resid[:, None] - b * z1[None, :]
        logk = -(dev * dev) / (2.0 * g * g)
        logk = logk + np.log(w)[None, :]
        m = logk.max()
        kern = np.exp(logk - m)
        eta = dev / g
        integrand = ad * anchors[:, None] + bd * z1[None, :] + gd * eta
        num = float((kern * integrand).sum())
        den = float(kern.sum())
    else:
        # gamma = 0: the noise density is a point mass, z1 = resid / beta
        z1 = resid / b
        logk = -0.5 * z1 * z1
        m = logk.max()
        kern = np.exp(logk - m)
        num = float((kern * (ad * anchors + bd * z1)).sum())
        den = float(kern.sum())
    return num / den


def fd_score_oracle(
    z, t: float, X: TrainingSet, s: Schedule, step: float = 1e-5
) -> np.ndarray:
    """Central finite differences of the mixture log-density, per coordinate."""
    z = np.asarray(z, dtype=float).reshape(X.d)
    out = np.empty(X.d)
    for j in range(X.d):
        zp = z.copy()
        zm = z.copy()
        zp[j] += step
        zm[j] -= step
        out[j] = (log_density(zp, t, X, s) - log_density(zm, t, X, s)) / (2.0 * step)
    return out
