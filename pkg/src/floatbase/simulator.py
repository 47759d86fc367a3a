"""Synthetic biped walking data with exact ground truth.

The base follows piecewise quintic Hermite splines (zero acceleration at
every waypoint, so position is C2 and accelerations are analytic). Feet are
flat; a stance foot's pose is copied verbatim from its footstep, so it is
bit-for-bit constant while in contact. IMU readings are the exact specific
force and body rate plus biases and seeded white noise; encoder readings come
from inverse kinematics on the leg chains plus seeded white noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BPoly

from . import rng
from .kinematics import KinematicChain, forward_kinematics, inverse_kinematics
from .lie import Pose
from .process import GRAVITY, ProcessNoiseParams, gravity_vector

FEET = ("left", "right")


class InfeasibleGaitError(ValueError):
    pass


@dataclass(frozen=True)
class GaitSpec:
    step_length: float = 0.1
    step_duration: float = 0.8
    double_support_fraction: float = 0.25
    base_height: float = 0.45
    sway_amplitude: float = 0.02
    duration: float = 10.0
    rate: float = 100.0
    seed: int = 0
    stance_width: float = 0.16
    foot_clearance: float = 0.04
    tilt_amplitude: float = 0.03  # peak base roll during single support [rad]
    accel_bias: tuple[float, float, float] = (0.005, -0.005, 0.01)
    gyro_bias: tuple[float, float, float] = (0.001, -0.001, 0.0005)

    def __post_init__(self):
        if self.step_duration <= 0 or self.duration <= 0:
            raise ValueError("durations must be positive")
        if not 0.0 <= self.double_support_fraction <= 1.0:
            raise ValueError("double_support_fraction must lie in [0, 1]")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.step_length < 0:
            raise ValueError("step_length must be non-negative")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.rate)) + 1


@dataclass
class GroundTruth:
    t: np.ndarray
    p: np.ndarray  # (N, 3)
    R: np.ndarray  # (N, 3, 3)
    v: np.ndarray
    accel: np.ndarray  # world-frame acceleration
    body_rate: np.ndarray  # body-frame angular velocity
    dl: np.ndarray
    Zl: np.ndarray
    dr: np.ndarray
    Zr: np.ndarray
    contact_l: np.ndarray  # bool (N,)
    contact_r: np.ndarray
    ba: np.ndarray  # (N, 3)
    bg: np.ndarray
    n_steps: int = 0
    spec: GaitSpec = field(default_factory=GaitSpec)

    def __len__(self) -> int:
        return len(self.t)

    def foot(self, side: str, k: int) -> Pose:
        if side == "left":
            return Pose(self.dl[k], self.Zl[k])
        return Pose(self.dr[k], self.Zr[k])

    def base_pose(self, k: int) -> Pose:
        return Pose(self.p[k], self.R[k])

    def contacts(self, side: str) -> np.ndarray:
        return self.contact_l if side == "left" else self.contact_r


@dataclass(frozen=True)
class _Phase:
    kind: str  # "ds" or "ss"
    t0: float
    t1: float
    swing: str | None = None
    x_from: float = 0.0
    x_to: float = 0.0

    @property
    def mid(self) -> float:
        return 0.5 * (self.t0 + self.t1)


def _schedule(spec: GaitSpec) -> tuple[list[_Phase], int]:
    """Phases of the walk: standing start, n forward steps, closing step, standing end."""
    T = spec.step_duration
    t_ds = spec.double_support_fraction * T
    t_ss = T - t_ds
    if spec.step_length == 0 or t_ss <= 0:
        return [_Phase("ds", 0.0, spec.duration)], 0
    # one step of standing at each end plus the closing step
    n = int(math.floor((spec.duration - 3 * T) / T + 1e-9))
    if n < 1:
        return [_Phase("ds", 0.0, spec.duration)], 0
    phases = [_Phase("ds", 0.0, T)]
    t = T
    x = {"left": 0.0, "right": 0.0}
    swing_order = ["right" if j % 2 == 0 else "left" for j in range(n)]
    targets = [(f, (j + 1) * spec.step_length) for j, f in enumerate(swing_order)]
    closing = "left" if swing_order[-1] == "right" else "right"
    targets.append((closing, n * spec.step_length))
    for f, xt in targets:
        phases.append(_Phase("ss", t, t + t_ss, f, x[f], xt))
        x[f] = xt
        t += t_ss
        if t_ds > 0:
            phases.append(_Phase("ds", t, t + t_ds))
            t += t_ds
    phases.append(_Phase("ds", t, spec.duration))
    return phases, n


def _spline(times, values) -> BPoly:
    """C2 quintic Hermite through (times, values) with Catmull-Rom slopes,
    zero slope at both ends and zero acceleration at every knot."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.zeros_like(values)
    if len(times) > 2:
        slopes[1:-1] = (values[2:] - values[:-2]) / (times[2:] - times[:-2])
    return BPoly.from_derivatives(times, [[y, dy, 0.0] for y, dy in zip(values, slopes)], orders=5)


def _euler_zyx(yaw, pitch, roll) -> np.ndarray:
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    R = np.empty((len(yaw), 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R


def _hip_and_reach(chain: KinematicChain) -> tuple[np.ndarray, float, Pose]:
    hip = chain.joints[0].offset.p
    reach = sum(float(np.linalg.norm(j.offset.p)) for j in chain.joints[1:])
    return hip, reach, chain.foot


def generate_gait(spec: GaitSpec, legs: dict[str, KinematicChain] | None = None) -> GroundTruth:
    """Ground-truth walk for ``spec``.

    With ``legs`` given (the bundled model is used otherwise) the relative foot
    poses are checked against each leg's reach.
    """
    phases, n_steps = _schedule(spec)
    N = spec.n_samples
    t = np.arange(N) / spec.rate
    half_w = 0.5 * spec.stance_width
    foot_y = {"left": half_w, "right": -half_w}

    # base waypoints: standing start/end, double-support midpoints, sway at single support
    feet_x = {"left": 0.0, "right": 0.0}
    tx, vx = [0.0], [0.0]
    ty, vy, vroll, vyaw = [0.0], [0.0], [0.0], [0.0]
    for ph in phases:
        if ph.kind == "ss":
            stance = "left" if ph.swing == "right" else "right"
            side = 1.0 if stance == "left" else -1.0
            ty.append(ph.mid)
            vy.append(side * spec.sway_amplitude)
            vroll.append(-side * spec.tilt_amplitude)
            vyaw.append(side * 0.5 * spec.tilt_amplitude)
            feet_x[ph.swing] = ph.x_to
        elif 0.0 < ph.t0 and ph.t1 < spec.duration:
            tx.append(ph.mid)
            vx.append(0.5 * (feet_x["left"] + feet_x["right"]))
            ty.append(ph.mid)
            vy.append(0.0)
            vroll.append(0.0)
            vyaw.append(0.0)
    tx.append(spec.duration)
    vx.append(n_steps * spec.step_length)
    ty.append(spec.duration)
    vy.append(0.0)
    vroll.append(0.0)
    vyaw.append(0.0)

    sx, sy = _spline(tx, vx), _spline(ty, vy)
    sroll, syaw = _spline(ty, vroll), _spline(ty, vyaw)
    p = np.column_stack([sx(t), sy(t), np.full(N, spec.base_height)])
    v = np.column_stack([sx.derivative(1)(t), sy.derivative(1)(t), np.zeros(N)])
    a = np.column_stack([sx.derivative(2)(t), sy.derivative(2)(t), np.zeros(N)])
    roll, droll = sroll(t), sroll.derivative(1)(t)
    yaw, dyaw = syaw(t), syaw.derivative(1)(t)
    pitch = np.zeros(N)
    R = _euler_zyx(yaw, pitch, roll)
    # body angular velocity for ZYX Euler angles (pitch rate is zero)
    body_rate = np.column_stack([
        droll - dyaw * np.sin(pitch),
        dyaw * np.cos(pitch) * np.sin(roll),
        dyaw * np.cos(pitch) * np.cos(roll),
    ])

    # feet
    d = {f: np.zeros((N, 3)) for f in FEET}
    contact = {f: np.ones(N, dtype=bool) for f in FEET}
    step_pos = {f: np.array([0.0, foot_y[f], 0.0]) for f in FEET}
    for f in FEET:
        d[f][:] = step_pos[f]
    for ph in phases:
        if ph.kind != "ss":
            continue
        f = ph.swing
        start = np.array([ph.x_from, foot_y[f], 0.0])
        end = np.array([ph.x_to, foot_y[f], 0.0])
        idx = np.nonzero((t > ph.t0) & (t < ph.t1))[0]
        s = (t[idx] - ph.t0) / (ph.t1 - ph.t0)
        blend = 10 * s**3 - 15 * s**4 + 6 * s**5
        d[f][idx, 0] = start[0] + (end[0] - start[0]) * blend
        d[f][idx, 2] = spec.foot_clearance * 64.0 * s**3 * (1 - s) ** 3
        contact[f][idx] = False
        later = t >= ph.t1
        d[f][later] = end
    Z = np.broadcast_to(np.eye(3), (N, 3, 3)).copy()

    gt = GroundTruth(
        t=t, p=p, R=R, v=v, accel=a, body_rate=body_rate,
        dl=d["left"], Zl=Z.copy(), dr=d["right"], Zr=Z.copy(),
        contact_l=contact["left"], contact_r=contact["right"],
        ba=np.tile(np.asarray(spec.accel_bias, dtype=float), (N, 1)),
        bg=np.tile(np.asarray(spec.gyro_bias, dtype=float), (N, 1)),
        n_steps=n_steps, spec=spec,
    )
    if legs is None:
        from .kinematics import load_legs

        legs = load_legs()
    _check_reach(gt, legs)
    return gt


def _check_reach(gt: GroundTruth, legs: dict[str, KinematicChain]) -> None:
    for f in FEET:
        hip, reach, foot_off = _hip_and_reach(legs[f])
        d = gt.dl if f == "left" else gt.dr
        Z = gt.Zl if f == "left" else gt.Zr
        # wrist point: foot frame moved back by the terminal offset
        wrist = d - np.einsum("nij,j->ni", Z, foot_off.R.T @ foot_off.p)
        rel = np.einsum("nji,nj->ni", gt.R, wrist - gt.p) - hip
        dist = np.linalg.norm(rel, axis=1).max()
        if dist > 0.99 * reach:
            raise InfeasibleGaitError(
                f"{f} leg needs {dist:.3f} m but reaches {reach:.3f} m; shorten the step or lower the base")


def synthesize_imu(
    gt: GroundTruth,
    noise: ProcessNoiseParams,
    seed: int,
    noise_scale: float = 1.0,
    gravity: float = GRAVITY,
) -> tuple[np.ndarray, np.ndarray]:
    """Accelerometer and gyroscope samples, each (N, 3)."""
    g = gravity_vector(gravity)
    N = len(gt)
    f = np.einsum("nji,nj->ni", gt.R, gt.accel - g) + gt.ba
    w = gt.body_rate + gt.bg
    if noise_scale:
        f = f + noise_scale * noise.accel * rng.gaussian(seed, rng.STREAM_ACCEL, (N, 3))
        w = w + noise_scale * noise.gyro * rng.gaussian(seed, rng.STREAM_GYRO, (N, 3))
    return f, w


# bent-knee starting guess for the reference leg layout
_IK_SEED = np.array([0.0, 0.0, -0.5, 1.0, -0.5, 0.0])


def true_joint_angles(gt: GroundTruth, legs: dict[str, KinematicChain]) -> dict[str, np.ndarray]:
    """Joint trajectories reproducing the relative foot poses (warm-started IK)."""
    out = {}
    for f in FEET:
        chain = legs[f]
        s = _IK_SEED[: chain.dof].copy() if chain.dof == len(_IK_SEED) else np.zeros(chain.dof)
        q = np.empty((len(gt), chain.dof))
        for k in range(len(gt)):
            target = gt.base_pose(k).inverse() @ gt.foot(f, k)
            s = inverse_kinematics(chain, target, s)
            q[k] = s
        out[f] = q
    return out


def synthesize_encoders(
    gt: GroundTruth,
    legs: dict[str, KinematicChain],
    encoder_std: float,
    seed: int,
    noise_scale: float = 1.0,
    true_angles: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Measured joint angles per leg: IK solution plus Gaussian noise."""
    q = true_angles or true_joint_angles(gt, legs)
    n_l = legs["left"].dof
    total = n_l + legs["right"].dof
    noise = rng.gaussian(seed, rng.STREAM_ENCODER, (len(gt), total)) * (encoder_std * noise_scale)
    return {"left": q["left"] + noise[:, :n_l], "right": q["right"] + noise[:, n_l:]}


@dataclass
class SensorLog:
    """Everything the estimator consumes, sample-aligned with the ground truth."""

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    encoders: dict[str, np.ndarray]
    contact_l: np.ndarray
    contact_r: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def simulate(
    spec: GaitSpec,
    noise: ProcessNoiseParams,
    encoder_std: float,
    legs: dict[str, KinematicChain],
    noise_scale: float = 1.0,
    gravity: float = GRAVITY,
) -> tuple[GroundTruth, SensorLog]:
    gt = generate_gait(spec, legs)
    accel, gyro = synthesize_imu(gt, noise, spec.seed, noise_scale, gravity)
    enc = synthesize_encoders(gt, legs, encoder_std, spec.seed, noise_scale)
    return gt, SensorLog(gt.t.copy(), accel, gyro, enc, gt.contact_l.copy(), gt.contact_r.copy())


def fk_residual(chain: KinematicChain, s, target: Pose) -> np.ndarray:
    """``log(target^-1 FK(s))``; used to check encoder synthesis."""
    return (target.inverse() @ forward_kinematics(chain, s)).log()

