"""Constant-velocity Kalman filtering for bounding-box motion.

A generic linear filter core drives a box-specific parameterization:
the state is [u, v, s, r, du, dv, ds] (box center, area, aspect ratio,
and velocities; aspect ratio carries no velocity). Boxes convert to the
measurement vector [u, v, s, r] and back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BoundingBox

MIN_AREA = 1.0
MIN_ASPECT = 0.01

STATE_DIM = 7
MEAS_DIM = 4


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray  # shape (7,)
    cov: np.ndarray  # shape (7, 7), symmetric positive definite

    def __post_init__(self) -> None:
        if self.mean.shape != (STATE_DIM,) or self.cov.shape != (STATE_DIM, STATE_DIM):
            raise ValueError("state must be a 7-vector with a 7x7 covariance")


class LinearKalman:
    """Textbook linear Kalman filter with fixed model matrices.

    predict/update are pure: they return new (mean, cov) arrays. The
    update uses the Joseph form so the posterior covariance stays
    symmetric positive semidefinite; both steps re-symmetrize explicitly
    to keep round-off from accumulating.
    """

    def __init__(self, F: np.ndarray, H: np.ndarray, Q: np.ndarray, R: np.ndarray):
        self.F = np.asarray(F, dtype=float)
        self.H = np.asarray(H, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.R = np.asarray(R, dtype=float)

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mean = self.F @ mean
        cov = self.F @ cov @ self.F.T + self.Q
        return mean, _symmetrize(cov)

    def update(
        self, mean: np.ndarray, cov: np.ndarray, z: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError(f"measurement must be finite, got {z!r}")
        innovation = z - self.H @ mean
        S = self.H @ cov @ self.H.T + self.R
        K = np.linalg.solve(S.T, (cov @ self.H.T).T).T
        mean = mean + K @ innovation
        ikh = np.eye(cov.shape[0]) - K @ self.H
        cov = ikh @ cov @ ikh.T + K @ self.R @ K.T
        return mean, _symmetrize(cov)


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    return (cov + cov.T) / 2.0


class BoxMotionModel:
    """Box tracker state machine: init from a detection, predict, correct."""

    def __init__(self, process_noise: float = 1.0, measurement_noise: float = 1.0):
        F = np.eye(STATE_DIM)
        F[0, 4] = F[1, 5] = F[2, 6] = 1.0
        H = np.zeros((MEAS_DIM, STATE_DIM))
        H[:, :MEAS_DIM] = np.eye(MEAS_DIM)
        Q = np.diag([1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 0.0001]) * process_noise
        R = np.diag([1.0, 1.0, 10.0, 10.0]) * measurement_noise
        self.filter = LinearKalman(F, H, Q, R)
        self._p0 = np.diag([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4])

    def init(self, box: BoundingBox) -> KalmanState:
        mean = np.zeros(STATE_DIM)
        mean[:MEAS_DIM] = box_to_measurement(box)
        return KalmanState(mean, self._p0.copy())

    def predict(self, state: KalmanState) -> KalmanState:
        mean, cov = self.filter.predict(state.mean, state.cov)
        if mean[2] <= 0.0:
            mean = mean.copy()
            mean[2] = MIN_AREA
            mean[6] = 0.0
        return KalmanState(mean, cov)

    def update(self, state: KalmanState, box: BoundingBox) -> KalmanState:
        z = box_to_measurement(box)
        mean, cov = self.filter.update(state.mean, state.cov, z)
        if mean[2] < MIN_AREA or mean[3] < MIN_ASPECT:
            mean = mean.copy()
            mean[2] = max(mean[2], MIN_AREA)
            mean[3] = max(mean[3], MIN_ASPECT)
        return KalmanState(mean, cov)

    def predicted_box(self, state: KalmanState) -> BoundingBox:
        return measurement_to_box(state.mean[:MEAS_DIM])


_DEFAULT_MODEL = BoxMotionModel()


def kalman_predict(state: KalmanState, model: BoxMotionModel | None = None) -> KalmanState:
    return (model or _DEFAULT_MODEL).predict(state)


def kalman_update(
    state: KalmanState, box: BoundingBox, model: BoxMotionModel | None = None
) -> KalmanState:
    return (model or _DEFAULT_MODEL).update(state, box)


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    """(x, y, w, h) -> [center_x, center_y, area, aspect_ratio]."""
    u = box.x + box.w / 2.0
    v = box.y + box.h / 2.0
    return np.array([u, v, box.w * box.h, box.w / box.h])


def measurement_to_box(z: np.ndarray) -> BoundingBox:
    """Inverse of box_to_measurement with area/aspect clamped positive."""
    s = max(float(z[2]), MIN_AREA)
    r = max(float(z[3]), MIN_ASPECT)
    w = np.sqrt(s * r)
    h = s / w
    return BoundingBox(float(z[0]) - w / 2.0, float(z[1]) - h / 2.0, float(w), float(h))
