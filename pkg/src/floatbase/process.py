"""Strap-down IMU process model with stationary contact feet and random-walk biases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie
from . import state as st
from .lgekf import ProcessModel
from .state import EstimatorState

GRAVITY = 9.80665


def gravity_vector(g: float = GRAVITY) -> np.ndarray:
    """Gravity in the inertial frame, z axis up."""
    return np.array([0.0, 0.0, -g])


@dataclass(frozen=True)
class ImuInput:
    accel: np.ndarray  # specific force, base frame [m/s^2]
    gyro: np.ndarray  # angular rate, base frame [rad/s]
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class ContactFlags:
    left: bool = True
    right: bool = True

    def __getitem__(self, side: str) -> bool:
        if side == "left":
            return self.left
        if side == "right":
            return self.right
        raise KeyError(side)


@dataclass(frozen=True)
class ProcessInput:
    imu: ImuInput
    contacts: ContactFlags = field(default_factory=ContactFlags)


@dataclass(frozen=True)
class ProcessNoiseParams:
    """White-noise standard deviations of the process model."""

    accel: float = 0.09
    gyro: float = 0.01
    accel_bias: float = 0.01
    gyro_bias: float = 0.001
    foot_lin: float = 0.009
    foot_ang: float = 0.004
    swing_inflation: float = 1e4

    def __post_init__(self):
        for name in ("accel", "gyro", "accel_bias", "gyro_bias", "foot_lin", "foot_ang"):
            if getattr(self, name) < 0:
                raise ValueError(f"noise std {name} must be non-negative")
        if self.swing_inflation < 1:
            raise ValueError("swing_inflation must be >= 1")


# index of each 3-channel white-noise group in the 24-vector
_CH_ACC, _CH_GYR, _CH_LV, _CH_LW, _CH_RV, _CH_RW, _CH_BA, _CH_BG = (slice(3 * i, 3 * i + 3) for i in range(8))


def noise_mapping(dt: float) -> np.ndarray:
    """Linear map D from the 24 white-noise channels to the 27-dim tangent.

    Channels: accel, gyro, left foot lin/ang, right foot lin/ang, accel bias,
    gyro bias.
    """
    I3 = np.eye(3)
    D = np.zeros((st.DIM, 24))
    D[st.P, _CH_ACC] = -0.5 * dt * dt * I3
    D[st.R, _CH_GYR] = -dt * I3
    D[st.V, _CH_ACC] = -dt * I3
    D[st.DL, _CH_LV] = dt * I3
    D[st.ZL, _CH_LW] = dt * I3
    D[st.DR, _CH_RV] = dt * I3
    D[st.ZR, _CH_RW] = dt * I3
    D[st.BA, _CH_BA] = dt * I3
    D[st.BG, _CH_BG] = dt * I3
    return D


def noise_covariance(params: ProcessNoiseParams, contacts: ContactFlags, dt: float) -> np.ndarray:
    """Q = D diag(sigma^2) D^T; the blocks of a foot out of contact are then
    scaled by the swing inflation factor."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    var = np.repeat(
        [
            params.accel**2,
            params.gyro**2,
            params.foot_lin**2,
            params.foot_ang**2,
            params.foot_lin**2,
            params.foot_ang**2,
            params.accel_bias**2,
            params.gyro_bias**2,
        ],
        3,
    )
    D = noise_mapping(dt)
    Q = (D * var) @ D.T
    Q = 0.5 * (Q + Q.T)
    # foot blocks are uncorrelated with everything else, so scaling the
    # diagonal block inflates that foot's noise
    for foot, sl in (("left", st.LEFT), ("right", st.RIGHT)):
        if not contacts[foot]:
            Q[sl, sl] *= params.swing_inflation
    return Q


def increment(X: EstimatorState, imu: ImuInput, g: np.ndarray | None = None) -> np.ndarray:
    """Left-trivialized increment over one sample period."""
    if g is None:
        g = gravity_vector()
    dt = imu.dt
    Rt = X.R.T
    alpha = (np.asarray(imu.accel) - X.ba) + Rt @ g
    w = np.asarray(imu.gyro) - X.bg
    out = np.zeros(st.DIM)
    out[st.P] = Rt @ X.v * dt + 0.5 * alpha * dt * dt
    out[st.R] = w * dt
    out[st.V] = alpha * dt
    return out


def process_jacobian(X: EstimatorState, imu: ImuInput, g: np.ndarray | None = None) -> np.ndarray:
    """d/de increment(X exp(e), u) at e = 0."""
    if g is None:
        g = gravity_vector()
    dt = imu.dt
    Rt = X.R.T
    Rg = Rt @ g
    xi = Rt @ X.v * dt + 0.5 * Rg * dt * dt
    I3 = np.eye(3)
    F = np.zeros((st.DIM, st.DIM))
    F[st.P, st.R] = lie.skew(xi)
    F[st.P, st.V] = dt * I3
    F[st.P, st.BA] = -0.5 * dt * dt * I3
    F[st.R, st.BG] = -dt * I3
    F[st.V, st.R] = lie.skew(Rg * dt)
    F[st.V, st.BA] = -dt * I3
    return F


def propagate_mean_direct(X: EstimatorState, imu: ImuInput, g: np.ndarray | None = None) -> EstimatorState:
    """Noise-free discrete dynamics evaluated row by row, without the exponential.

    The filter propagates with ``X exp(increment)``; this reference form differs from
    it at second order in dt and is kept for comparison.
    """
    if g is None:
        g = gravity_vector()
    dt = imu.dt
    alpha = (np.asarray(imu.accel) - X.ba) + X.R.T @ g
    w = np.asarray(imu.gyro) - X.bg
    return X.replace(
        p=X.p + X.v * dt + 0.5 * X.R @ alpha * dt * dt,
        R=X.R @ lie.so3_exp(w * dt),
        v=X.v + X.R @ alpha * dt,
    )


@dataclass(frozen=True)
class ImuMounting:
    """Fixed base-to-IMU transform; identity means the frames coincide."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def to_base(self, imu: ImuInput) -> ImuInput:
        """Express readings in the base frame (angular-acceleration term ignored)."""
        w = self.rotation @ np.asarray(imu.gyro)
        a = self.rotation @ np.asarray(imu.accel) - np.cross(w, np.cross(w, self.offset))
        return ImuInput(a, w, imu.dt)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.rotation, np.eye(3)) and not np.any(self.offset))


class KinematicInertialProcess(ProcessModel):
    """Process model consumed by :mod:`floatbase.lgekf`; input is a :class:`ProcessInput`."""

    def __init__(self, params: ProcessNoiseParams | None = None, gravity: float = GRAVITY,
                 mounting: ImuMounting | None = None):
        self.params = params or ProcessNoiseParams()
        self.g = gravity_vector(gravity)
        self.mounting = mounting or ImuMounting()

    def _imu(self, u: ProcessInput) -> ImuInput:
        return u.imu if self.mounting.is_identity else self.mounting.to_base(u.imu)

    def increment(self, X, u: ProcessInput) -> np.ndarray:
        return increment(X, self._imu(u), self.g)

    def jacobian(self, X, u: ProcessInput) -> np.ndarray:
        return process_jacobian(X, self._imu(u), self.g)

    def noise_cov(self, X, u: ProcessInput) -> np.ndarray:
        return noise_covariance(self.params, u.contacts, u.imu.dt)
