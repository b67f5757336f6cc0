import numpy as np
import pytest

from exactsi import (
    CONVERGED,
    DIVERGED,
    VICINITY,
    InsufficientDataError,
    NotApplicableError,
    SamplerConfig,
    TrainingSet,
    ValidationError,
    classify_endpoints,
    fd_score_oracle,
    make_schedule,
    mc_velocity_oracle,
    memorization_test,
    monotone_divergence,
    nearest_neighbor,
    residual_variance,
    sample_deterministic,
    score,
    uniform_toy,
    velocity,
)
from exactsi.samplers import Trajectory

LIN = make_schedule("linear")
SQRT = make_schedule("sqrt")
X01 = TrainingSet(points=np.array([[0.0], [1.0]]))


def _traj(endpoint, states=None, diverged=False):
    endpoint = np.asarray(endpoint, dtype=float)
    return Trajectory(
        times=np.array([1.0, 0.5]),
        states=None if states is None else np.asarray(states, dtype=float),
        endpoint=endpoint,
        seed=0,
        diverged=diverged,
    )


class TestNearestNeighbor:
    def test_basic(self):
        r = nearest_neighbor(np.array([0.2]), X01)
        assert (r.index1, r.index2) == (0, 1)
        assert r.d1 == pytest.approx(0.2)
        assert r.d2 == pytest.approx(0.8)

    def test_tie_breaks_to_smaller_index(self):
        r = nearest_neighbor(np.array([0.5]), X01)
        assert r.index1 == 0
        assert r.index2 == 1

    def test_single_anchor_has_no_second(self):
        r = nearest_neighbor(np.array([3.0]), TrainingSet(points=np.array([[1.0]])))
        assert r.index2 is None and r.d2 is None


class TestMemorization:
    def test_ratio_arithmetic(self):
        # d1=0.1, d2=0.6 -> ratio 0.0278 <= 1/3: memorized
        X = TrainingSet(points=np.array([[0.0], [0.7]]))
        rep = memorization_test(np.array([[0.1]]), X)
        assert rep.nn[0].d1 == pytest.approx(0.1)
        assert rep.nn[0].d2 == pytest.approx(0.6)
        assert rep.memorized[0]
        # d1=1, d2=1.5 -> ratio 0.444 > 1/3: not memorized
        X = TrainingSet(points=np.array([[0.0], [2.5]]))
        rep = memorization_test(np.array([[1.0]]), X)
        assert rep.nn[0].d2 == pytest.approx(1.5)
        assert not rep.memorized[0]

    def test_boundary_inclusive(self):
        # place a sample where d1^2/d2^2 is exactly 1/3
        d2 = 0.9
        d1 = d2 / np.sqrt(3.0)
        z = np.array([[d1]])  # anchors at 0 and 1: d2 to anchor 1 is 1 - d1
        X = TrainingSet(points=np.array([[0.0], [d1 + d2]]))
        rep = memorization_test(z, X)
        assert rep.nn[0].d1 == pytest.approx(d1)
        assert rep.nn[0].d2 == pytest.approx(d2)
        assert rep.memorized[0]

    def test_fraction(self):
        pts = np.array([[0.01], [0.5], [0.99]])
        rep = memorization_test(pts, X01)
        assert rep.memorized_fraction == pytest.approx(2.0 / 3.0)

    def test_needs_two_anchors(self):
        with pytest.raises(ValidationError):
            memorization_test(np.array([[0.0]]), TrainingSet(points=np.array([[1.0]])))


class TestClassifyEndpoints:
    X = uniform_toy(4, 2, seed=2)

    def test_three_way_partition(self):
        trs = [
            _traj(self.X.points[1] + 1e-3),
            _traj(self.X.points[0] + 0.3),
            _traj(np.array([1e5, 1e5])),
            _traj(self.X.points[2], diverged=True),
        ]
        classes, idx = classify_endpoints(trs, self.X)
        assert classes == [CONVERGED, VICINITY, DIVERGED, DIVERGED]
        assert idx[0] == 1
        assert idx[1] is None

    def test_custom_tolerances(self):
        trs = [_traj(self.X.points[0] + 0.05)]
        classes, _ = classify_endpoints(trs, self.X, tol_conv=0.1)
        assert classes == [CONVERGED]


class TestResidualVariance:
    def test_zero_on_anchors(self):
        X = uniform_toy(3, 2, seed=4)
        samples = np.repeat(X.points, 15, axis=0)
        sigma2, means, assign = residual_variance(samples, X)
        assert sigma2 == 0.0
        np.testing.assert_array_equal(means, 0.0)
        assert set(assign) == {0, 1, 2}

    def test_recovers_synthetic_variance(self):
        # anchors far apart relative to the residual width, so nearest-anchor
        # assignment recovers the generating anchor
        rng = np.random.default_rng(6)
        X = uniform_toy(5, 2, seed=3, scale=10.0)
        anchors = X.points[rng.integers(0, 5, size=2000)]
        samples = anchors + rng.normal(0.0, np.sqrt(0.016), size=(2000, 2))
        sigma2, _, _ = residual_variance(samples, X)
        assert sigma2 == pytest.approx(0.016, rel=0.15)

    def test_estimator_unbiased_over_repetitions(self):
        rng = np.random.default_rng(9)
        X = TrainingSet(points=np.array([[0.0, 0.0], [50.0, 50.0]]))
        true = 0.25
        estimates = []
        for _ in range(20):
            base = X.points[rng.integers(0, 2, size=500)]
            samples = base + rng.normal(0.0, np.sqrt(true), size=(500, 2))
            estimates.append(residual_variance(samples, X)[0])
        assert np.mean(estimates) == pytest.approx(true, rel=0.02)

    def test_insufficient_data(self):
        X = uniform_toy(3, 2, seed=4)
        with pytest.raises(InsufficientDataError):
            residual_variance(np.zeros((29, 2)), X)


class TestMonotoneDivergence:
    def test_radially_escaping_path(self):
        X = TrainingSet(points=np.array([[0.0, 0.0]]))
        states = np.array([[1.0, 0.0], [2.0, 0.0], [4.0, 0.0]])
        assert monotone_divergence(_traj(states[-1], states=states), X)

    def test_approaching_path_is_false(self):
        X = uniform_toy(3, 2, seed=8)
        cfg = SamplerConfig(steps=200, t_end=1e-2, record_trajectory=True)
        tr = sample_deterministic(cfg, X, SQRT)
        assert not monotone_divergence(tr, X)

    def test_endpoint_only_rejected(self):
        with pytest.raises(ValidationError):
            monotone_divergence(_traj(np.array([0.0, 0.0])), uniform_toy(3, 2, seed=8))


class TestVelocityOracle:
    X1 = TrainingSet(points=np.array([[0.0], [1.0]]))

    def test_n1_linear_matches_symbolic(self):
        X = TrainingSet(points=np.array([[0.3]]))
        for z, t in ((0.9, 0.2), (-1.5, 0.7), (2.0, 0.45)):
            o = mc_velocity_oracle(z, t, X, LIN, nodes=96)
            assert o == pytest.approx((z - 0.3) / t, rel=1e-9)

    def test_two_anchor_frozen_value(self):
        o = mc_velocity_oracle(0.5, 0.5, self.X1, LIN, nodes=128)
        assert o == pytest.approx(-0.24492, abs=5e-6)

    def test_matches_closed_form_both_gammas(self):
        rng = np.random.default_rng(15)
        X = TrainingSet(points=rng.uniform(0, 1, (4, 1)))
        for s in (LIN, SQRT):
            for _ in range(50):
                t = float(rng.uniform(0.05, 0.95))
                z = float(rng.uniform(-1.5, 2.5))
                v = velocity(np.array([z]), t, X, s).vector[0]
                o = mc_velocity_oracle(z, t, X, s, nodes=128)
                assert abs(v - o) <= 1e-3 * max(abs(o), 1e-12)

    def test_far_field_log_domain_path(self):
        v = velocity(np.array([10.0]), 0.5, self.X1, SQRT).vector[0]
        o = mc_velocity_oracle(10.0, 0.5, self.X1, SQRT, nodes=128)
        assert abs(v - o) <= 1e-3 * abs(o)

    def test_only_one_dimensional(self):
        with pytest.raises(NotApplicableError):
            mc_velocity_oracle(0.0, 0.5, uniform_toy(3, 2, seed=1), SQRT)


class TestScoreOracle:
    def test_matches_closed_form(self):
        rng = np.random.default_rng(16)
        X = uniform_toy(5, 2, seed=7)
        for _ in range(100):
            t = float(rng.uniform(0.05, 0.95))
            z = rng.uniform(-2.0, 3.0, size=2)
            fd = fd_score_oracle(z, t, X, SQRT)
            sc = score(z, t, X, SQRT).vector
            assert np.abs(sc - fd).max() <= 1e-6 * max(np.abs(fd).max(), 1e-8)

    def test_zero_at_single_anchor_mean(self):
        X = TrainingSet(points=np.array([[0.7, -0.1]]))
        t = 0.4
        z = float(SQRT.alpha(t)) * X.points[0]
        fd = fd_score_oracle(z, t, X, SQRT)
        np.testing.assert_allclose(fd, 0.0, atol=1e-6)

    def test_translation_equivariance(self):
        # shifting z and the anchors together leaves the score unchanged
        X = uniform_toy(4, 2, seed=10)
        shift = np.array([3.0, -2.0])
        Xs = TrainingSet(points=X.points + shift)
        z = np.array([0.4, 0.6])
        t = 0.5
        a = float(SQRT.alpha(t))
        fd1 = fd_score_oracle(z, t, X, SQRT)
        fd2 = fd_score_oracle(z + a * shift, t, Xs, SQRT)
        np.testing.assert_allclose(fd1, fd2, atol=1e-5)
        sc1 = score(z, t, X, SQRT).vector
        sc2 = score(z + a * shift, t, Xs, SQRT).vector
        np.testing.assert_allclose(sc1, sc2, atol=1e-10)
