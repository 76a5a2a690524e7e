import numpy as np
import pytest

from roadaudit.kalman import (
    MIN_AREA,
    BoxMotionModel,
    KalmanState,
    LinearKalman,
    box_to_measurement,
    kalman_predict,
    kalman_update,
    measurement_to_box,
)
from roadaudit.model import BoundingBox


class ScalarKalman:
    """Hand-rolled 1-D reference filter using the simple-form update."""

    def __init__(self, q, r, x0, p0):
        self.q = q
        self.r = r
        self.x = x0
        self.p = p0

    def predict(self):
        self.p = self.p + self.q

    def update(self, z):
        k = self.p / (self.p + self.r)
        self.x = self.x + k * (z - self.x)
        self.p = (1.0 - k) * self.p


def make_state(mean):
    return KalmanState(np.asarray(mean, dtype=float), np.diag([10.0] * 4 + [1e4] * 3))


def test_zero_velocity_is_fixed_point():
    st = make_state([100.0, 200.0, 400.0, 1.0, 0.0, 0.0, 0.0])
    out = kalman_predict(st)
    assert np.allclose(out.mean, st.mean)
    assert np.trace(out.cov) > np.trace(st.cov)


def test_one_constant_velocity_step():
    st = make_state([100.0, 100.0, 400.0, 1.0, 5.0, 0.0, 0.0])
    out = kalman_predict(st)
    assert out.mean[0] == pytest.approx(105.0)
    assert out.mean[1] == pytest.approx(100.0)
    assert out.mean[2] == pytest.approx(400.0)


def test_predict_clamps_nonpositive_area():
    st = make_state([50.0, 50.0, 3.0, 1.0, 0.0, 0.0, -10.0])
    out = kalman_predict(st)
    assert out.mean[2] == MIN_AREA
    assert out.mean[6] == 0.0


def test_update_with_predicted_mean_keeps_mean():
    st = make_state([100.0, 100.0, 400.0, 1.0, 0.0, 0.0, 0.0])
    box = measurement_to_box(st.mean[:4])
    out = kalman_update(st, box)
    assert np.allclose(out.mean[:4], st.mean[:4], atol=1e-9)


def test_update_rejects_non_finite_measurement():
    model = BoxMotionModel()
    st = make_state([100.0, 100.0, 400.0, 1.0, 0.0, 0.0, 0.0])
    z = np.array([np.nan, 0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        model.filter.update(st.mean, st.cov, z)


def test_repeated_measurements_shrink_covariance():
    model = BoxMotionModel()
    box = BoundingBox(10.0, 10.0, 40.0, 40.0)
    st = model.init(box)
    traces = []
    for _ in range(20):
        st = model.update(st, box)
        traces.append(np.trace(st.cov))
    assert all(b <= a + 1e-12 for a, b in zip(traces, traces[1:]))


def test_posterior_mean_lies_between_prior_and_measurement():
    rng = np.random.default_rng(3)
    model = BoxMotionModel()
    st = model.init(BoundingBox(100.0, 100.0, 50.0, 60.0))
    for _ in range(200):
        st = model.predict(st)
        prior = st.mean[:4].copy()
        box = BoundingBox(
            100.0 + rng.uniform(-20, 20),
            100.0 + rng.uniform(-20, 20),
            50.0 + rng.uniform(1, 20),
            60.0 + rng.uniform(1, 20),
        )
        z = box_to_measurement(box)
        st = model.update(st, box)
        lo = np.minimum(prior, z) - 1e-9
        hi = np.maximum(prior, z) + 1e-9
        assert np.all(st.mean[:4] >= lo) and np.all(st.mean[:4] <= hi)


def test_noiseless_linear_motion_tracked_closely():
    # Closed-form trajectory: the box moves 3 px/frame in x, 2 px/frame in y.
    model = BoxMotionModel()
    st = model.init(BoundingBox(0.0, 0.0, 40.0, 40.0))
    for k in range(1, 51):
        st = model.predict(st)
        st = model.update(st, BoundingBox(3.0 * k, 2.0 * k, 40.0, 40.0))
    cx, cy = st.mean[0], st.mean[1]
    assert abs(cx - (3.0 * 50 + 20.0)) < 0.5
    assert abs(cy - (2.0 * 50 + 20.0)) < 0.5


def test_scalar_reduction_matches_reference_filter():
    q, r = 0.37, 2.1
    generic = LinearKalman(
        F=np.array([[1.0]]), H=np.array([[1.0]]), Q=np.array([[q]]), R=np.array([[r]])
    )
    x = np.array([0.0])
    p = np.array([[5.0]])
    ref = ScalarKalman(q, r, 0.0, 5.0)
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        x, p = generic.predict(x, p)
        ref.predict()
        z = rng.normal(1.0, 1.5)
        x, p = generic.update(x, p, np.array([z]))
        ref.update(z)
        assert abs(x[0] - ref.x) < 1e-12
        assert abs(p[0, 0] - ref.p) < 1e-12


def test_covariance_stays_symmetric_and_finite():
    rng = np.random.default_rng(21)
    model = BoxMotionModel()
    st = model.init(BoundingBox(500.0, 500.0, 80.0, 60.0))
    for i in range(10_000):
        st = model.predict(st)
        if i % 3 != 0:
            box = BoundingBox(
                rng.uniform(0, 1800), rng.uniform(0, 1000), rng.uniform(5, 120), rng.uniform(5, 120)
            )
            st = model.update(st, box)
        assert np.max(np.abs(st.cov - st.cov.T)) < 1e-9
        assert np.all(np.isfinite(st.cov)) and np.all(np.isfinite(st.mean))


def test_box_measurement_round_trip():
    box = BoundingBox(12.5, 40.0, 33.0, 11.0)
    z = box_to_measurement(box)
    back = measurement_to_box(z)
    assert back.x == pytest.approx(box.x)
    assert back.y == pytest.approx(box.y)
    assert back.w == pytest.approx(box.w)
    assert back.h == pytest.approx(box.h)
