"""Kinematic-inertial odometry: the Lie-group EKF wired to the IMU process
model and the leg forward-kinematics measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import state as st
from .kinematics import KinematicChain, fk_and_jacobian
from .lgekf import DivergenceError, LieGroupEKF
from .lie import Pose
from .measurement import FEET, contact_measurement, fk_noise_covariance
from .process import GRAVITY, ContactFlags, ImuInput, ImuMounting, KinematicInertialProcess, ProcessInput, ProcessNoiseParams
from .state import Belief, EstimatorState


@dataclass(frozen=True)
class PriorStd:
    """Initial standard deviations; positions and orientations apply to base and feet."""

    position: float = 0.01
    orientation: float = math.radians(10.0)
    velocity: float = 0.5
    accel_bias: float = 0.01
    gyro_bias: float = 0.002


def initial_covariance(prior: PriorStd) -> np.ndarray:
    d = np.empty(st.DIM)
    for sl in (st.P, st.DL, st.DR):
        d[sl] = prior.position**2
    for sl in (st.R, st.ZL, st.ZR):
        d[sl] = prior.orientation**2
    d[st.V] = prior.velocity**2
    d[st.BA] = prior.accel_bias**2
    d[st.BG] = prior.gyro_bias**2
    return np.diag(d)


@dataclass
class Estimate:
    """Per-sample filter output arrays."""

    t: np.ndarray
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray
    dl: np.ndarray
    Zl: np.ndarray
    dr: np.ndarray
    Zr: np.ndarray
    b: np.ndarray
    cov_diag: np.ndarray

    @classmethod
    def allocate(cls, n: int) -> "Estimate":
        return cls(
            t=np.empty(n), p=np.empty((n, 3)), R=np.empty((n, 3, 3)), v=np.empty((n, 3)),
            dl=np.empty((n, 3)), Zl=np.empty((n, 3, 3)), dr=np.empty((n, 3)), Zr=np.empty((n, 3, 3)),
            b=np.empty((n, 6)), cov_diag=np.empty((n, st.DIM)),
        )

    def store(self, k: int, t: float, belief: Belief) -> None:
        X = belief.mean
        self.t[k] = t
        self.p[k], self.R[k], self.v[k] = X.p, X.R, X.v
        self.dl[k], self.Zl[k], self.dr[k], self.Zr[k] = X.dl, X.Zl, X.dr, X.Zr
        self.b[k] = X.b
        self.cov_diag[k] = np.diag(belief.cov)

    def __len__(self) -> int:
        return len(self.t)


class KinematicInertialOdometry:
    """Sample-by-sample estimator.

    Each :meth:`step` call propagates with the previous sample's IMU reading
    over the elapsed time, then updates with the current encoder reading for
    every foot flagged in contact.
    """

    def __init__(
        self,
        legs: dict[str, KinematicChain],
        noise: ProcessNoiseParams | None = None,
        encoder_std: float = math.radians(0.1),
        prior: PriorStd | None = None,
        gravity: float = GRAVITY,
        gate: float | None = None,
        mounting: ImuMounting | None = None,
    ):
        self.legs = legs
        self.process = KinematicInertialProcess(noise, gravity, mounting)
        self.encoder_std = encoder_std
        self.prior = prior or PriorStd()
        self.gate = gate
        self.filter: LieGroupEKF | None = None
        self._last: tuple[float, np.ndarray, np.ndarray, ContactFlags] | None = None

    @property
    def belief(self) -> Belief:
        return self.filter.belief

    def feet_from_kinematics(self, base: Pose, encoders: dict[str, np.ndarray]) -> dict[str, Pose]:
        return {f: base @ fk_and_jacobian(self.legs[f], encoders[f])[0] for f in FEET}

    def initialize(self, t: float, p, R, v, encoders: dict[str, np.ndarray], bias=None) -> None:
        """Start from a base state; feet are placed by forward kinematics."""
        base = Pose(np.asarray(p, dtype=float), np.asarray(R, dtype=float))
        feet = self.feet_from_kinematics(base, encoders)
        mean = EstimatorState(
            p=base.p.copy(), R=base.R.copy(), v=np.asarray(v, dtype=float).copy(),
            dl=feet["left"].p, Zl=feet["left"].R, dr=feet["right"].p, Zr=feet["right"].R,
            b=np.zeros(6) if bias is None else np.asarray(bias, dtype=float).copy(),
        )
        self.filter = LieGroupEKF(Belief(mean, initial_covariance(self.prior)), gate=self.gate)
        self._last = None
        self._t0 = t

    def measurement(self, encoders: dict[str, np.ndarray], contacts: ContactFlags):
        poses, covs = {}, {}
        for f in FEET:
            if contacts[f]:
                pose, J = fk_and_jacobian(self.legs[f], encoders[f])
                poses[f] = pose
                covs[f] = fk_noise_covariance(J, self.encoder_std)
        return contact_measurement(contacts, poses, covs)

    def step(self, t: float, accel, gyro, encoders: dict[str, np.ndarray], contacts: ContactFlags) -> Belief:
        if self.filter is None:
            raise RuntimeError("initialize() must be called before step()")
        if self._last is not None:
            t_prev, a_prev, g_prev, c_prev = self._last
            u = ProcessInput(ImuInput(a_prev, g_prev, t - t_prev), c_prev)
            self.filter.propagate(self.process, u)
        model = self.measurement(encoders, contacts)
        if model is not None:
            self.filter.update(model, model.z)
        if not self.filter.mean.is_finite() or not np.all(np.isfinite(self.filter.cov)):
            raise DivergenceError(f"non-finite state at t={t}")
        self._last = (t, np.asarray(accel, dtype=float), np.asarray(gyro, dtype=float), contacts)
        return self.filter.belief


def run(
    odom: KinematicInertialOdometry,
    log,
    init_p,
    init_R,
    init_v,
    init_bias=None,
) -> Estimate:
    """Replay a sensor log (see :class:`floatbase.simulator.SensorLog`)."""
    n = len(log.t)
    out = Estimate.allocate(n)
    enc0 = {f: log.encoders[f][0] for f in FEET}
    odom.initialize(log.t[0], init_p, init_R, init_v, enc0, init_bias)
    for k in range(n):
        enc = {"left": log.encoders["left"][k], "right": log.encoders["right"][k]}
        contacts = ContactFlags(bool(log.contact_l[k]), bool(log.contact_r[k]))
        belief = odom.step(log.t[k], log.accel[k], log.gyro[k], enc, contacts)
        out.store(k, log.t[k], belief)
    return out
