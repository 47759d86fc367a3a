"""Left-invariant trajectory metrics and the randomized-initialization study.

Pose errors are ``E_i = est_i^-1 gt_i`` after aligning the estimate to the
ground truth at the first associated pose (no least-squares alignment).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lie, rng
from .estimator import KinematicInertialOdometry, PriorStd, run
from .kinematics import KinematicChain
from .lgekf import DivergenceError, SingularInnovationError
from .process import GRAVITY, ProcessNoiseParams


class EvaluationError(ValueError):
    pass


@dataclass
class Trajectory:
    """Time-stamped base poses with optional world-frame velocity."""

    t: np.ndarray
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.p = np.asarray(self.p, dtype=float).reshape(-1, 3)
        self.R = np.asarray(self.R, dtype=float).reshape(-1, 3, 3)
        if self.v is not None:
            self.v = np.asarray(self.v, dtype=float).reshape(-1, 3)
        n = len(self.t)
        if len(self.p) != n or len(self.R) != n or (self.v is not None and len(self.v) != n):
            raise EvaluationError("trajectory arrays differ in length")

    @classmethod
    def of(cls, obj) -> "Trajectory":
        """From anything with ``t``, ``p``, ``R`` and ``v`` arrays (estimates, ground truth)."""
        return cls(obj.t, obj.p, obj.R, getattr(obj, "v", None))

    def __len__(self) -> int:
        return len(self.t)

    def subset(self, idx) -> "Trajectory":
        return Trajectory(self.t[idx], self.p[idx], self.R[idx], None if self.v is None else self.v[idx])


def associate(est: Trajectory, gt: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour timestamp pairs within half the ground-truth period."""
    if len(est) == 0 or len(gt) == 0:
        raise EvaluationError("empty trajectory")
    period = float(np.median(np.diff(gt.t))) if len(gt) > 1 else math.inf
    j = np.clip(np.searchsorted(gt.t, est.t), 1, max(len(gt) - 1, 1))
    if len(gt) > 1:
        left_closer = np.abs(est.t - gt.t[j - 1]) <= np.abs(gt.t[j] - est.t)
        j = np.where(left_closer, j - 1, j)
    else:
        j = np.zeros(len(est), dtype=int)
    ok = np.abs(gt.t[j] - est.t) <= 0.5 * period + 1e-12
    if not np.any(ok):
        raise EvaluationError("no timestamps could be associated")
    return np.nonzero(ok)[0], j[ok]


def align_first_pose(est: Trajectory, gt: Trajectory) -> Trajectory:
    """Apply the constant left transform that maps est[0] onto gt[0]."""
    T = lie.Pose(gt.p[0], gt.R[0]) @ lie.Pose(est.p[0], est.R[0]).inverse()
    p = est.p @ T.R.T + T.p
    R = np.einsum("ij,njk->nik", T.R, est.R)
    v = None if est.v is None else est.v @ T.R.T
    return Trajectory(est.t, p, R, v)


def _rot_logs(R: np.ndarray) -> np.ndarray:
    return np.array([lie.so3_log(r) for r in R]).reshape(-1, 3)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0


@dataclass
class ErrorReport:
    """Table-style summary plus per-axis error series."""

    ate_rot_deg: float
    ate_pos_m: float
    ate_vel_mps: float
    rpe_rot_deg: float
    rpe_pos_m: float
    t: np.ndarray
    pos_err: np.ndarray
    rot_err: np.ndarray
    vel_err: np.ndarray | None = None
    rpe_window: float = 1.0

    def summary(self) -> dict[str, float | str]:
        return {
            "alignment": "first_pose",
            "ate_rot_deg": self.ate_rot_deg,
            "ate_pos_m": self.ate_pos_m,
            "ate_vel_mps": self.ate_vel_mps,
            "rpe_rot_deg": self.rpe_rot_deg,
            "rpe_pos_m": self.rpe_pos_m,
            "rpe_window_s": self.rpe_window,
            "samples": len(self.t),
        }

    def series_columns(self) -> tuple[list[str], np.ndarray]:
        names = ["t", "pos_x", "pos_y", "pos_z", "rot_x", "rot_y", "rot_z"]
        cols = [self.t[:, None], self.pos_err, self.rot_err]
        if self.vel_err is not None:
            names += ["vel_x", "vel_y", "vel_z"]
            cols.append(self.vel_err)
        return names, np.hstack(cols)


def align_and_ate(est: Trajectory, gt: Trajectory) -> dict[str, np.ndarray | float]:
    """First-pose aligned absolute errors.

    Returns the RMS values and the per-sample error series; rotation errors
    are rotation vectors of ``E_i`` in radians, velocity errors are expressed
    in the estimated body frame.
    """
    ie, ig = associate(est, gt)
    e, g = est.subset(ie), gt.subset(ig)
    a = align_first_pose(e, g)
    Rt = np.transpose(a.R, (0, 2, 1))
    pos = np.einsum("nij,nj->ni", Rt, g.p - a.p)
    rot = _rot_logs(np.einsum("nij,njk->nik", Rt, g.R))
    out = {
        "t": g.t,
        "pos": pos,
        "rot": rot,
        "ate_pos_m": _rms(np.linalg.norm(pos, axis=1)),
        "ate_rot_deg": math.degrees(_rms(np.linalg.norm(rot, axis=1))),
        "vel": None,
        "ate_vel_mps": math.nan,
    }
    if a.v is not None and g.v is not None:
        vel = np.einsum("nij,nj->ni", Rt, g.v - a.v)
        out["vel"] = vel
        out["ate_vel_mps"] = _rms(np.linalg.norm(vel, axis=1))
    return out


def rpe(est: Trajectory, gt: Trajectory, window: float = 1.0) -> tuple[float, float]:
    """RMS relative pose error over pairs ``window`` seconds apart (rot deg, pos m)."""
    ie, ig = associate(est, gt)
    e, g = est.subset(ie), gt.subset(ig)
    if len(g) < 2 or g.t[-1] - g.t[0] < window - 1e-9:
        raise EvaluationError(f"trajectory span is shorter than the {window} s window")
    period = float(np.median(np.diff(g.t)))
    step = max(1, int(round(window / period)))
    if step >= len(g):
        raise EvaluationError(f"trajectory span is shorter than the {window} s window")
    rot, pos = [], []
    for i in range(len(g) - step):
        de = lie.Pose(e.p[i], e.R[i]).inverse() @ lie.Pose(e.p[i + step], e.R[i + step])
        dg = lie.Pose(g.p[i], g.R[i]).inverse() @ lie.Pose(g.p[i + step], g.R[i + step])
        err = de.inverse() @ dg
        rot.append(np.linalg.norm(lie.so3_log(err.R)))
        pos.append(np.linalg.norm(err.p))
    return math.degrees(_rms(np.array(rot))), _rms(np.array(pos))


def evaluate(est: Trajectory, gt: Trajectory, rpe_window: float = 1.0) -> ErrorReport:
    a = align_and_ate(est, gt)
    r_rot, r_pos = rpe(est, gt, rpe_window)
    return ErrorReport(
        ate_rot_deg=a["ate_rot_deg"], ate_pos_m=a["ate_pos_m"], ate_vel_mps=a["ate_vel_mps"],
        rpe_rot_deg=r_rot, rpe_pos_m=r_pos, t=a["t"], pos_err=a["pos"], rot_err=a["rot"],
        vel_err=a["vel"], rpe_window=rpe_window,
    )


# --------------------------------------------------------------------------
# convergence study


def roll_pitch_yaw(R: np.ndarray) -> tuple[float, float, float]:
    """ZYX Euler angles with ``R = Rz(yaw) Ry(pitch) Rx(roll)``."""
    pitch = -math.asin(max(-1.0, min(1.0, R[2, 0])))
    return math.atan2(R[2, 1], R[2, 2]), pitch, math.atan2(R[1, 0], R[0, 0])


def rotation_zyx(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return lie.so3_exp([0.0, 0.0, yaw]) @ lie.so3_exp([0.0, pitch, 0.0]) @ lie.so3_exp([roll, 0.0, 0.0])


def _wrap(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class StudySettings:
    n_trials: int = 25
    max_tilt_deg: float = 30.0
    max_velocity: float = 0.5
    settle_time: float = 5.0
    tilt_tol_deg: float = 2.0
    velocity_tol: float = 0.05
    seed: int = 0


@dataclass
class TrialResult:
    index: int
    roll0_deg: float
    pitch0_deg: float
    v0: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    roll_err_deg: np.ndarray = field(default_factory=lambda: np.empty(0))
    pitch_err_deg: np.ndarray = field(default_factory=lambda: np.empty(0))
    vel_err: np.ndarray = field(default_factory=lambda: np.empty(0))
    failure: str = ""

    def settle_time(self, tilt_tol_deg: float, velocity_tol: float) -> float:
        """First time after which both errors stay below tolerance (inf if never)."""
        if self.failure or len(self.t) == 0:
            return math.inf
        bad = (np.maximum(np.abs(self.roll_err_deg), np.abs(self.pitch_err_deg)) >= tilt_tol_deg) | (
            self.vel_err >= velocity_tol
        )
        idx = np.nonzero(bad)[0]
        if len(idx) == 0:
            return float(self.t[0])
        if idx[-1] == len(self.t) - 1:
            return math.inf
        return float(self.t[idx[-1] + 1])


def trial_initial_conditions(settings: StudySettings) -> np.ndarray:
    """(n_trials, 5) array of roll, pitch (rad) and velocity draws, in trial order."""
    u = rng.uniform(settings.seed, rng.STREAM_TRIAL, 5 * settings.n_trials).reshape(settings.n_trials, 5)
    out = 2.0 * u - 1.0
    out[:, :2] *= math.radians(settings.max_tilt_deg)
    out[:, 2:] *= settings.max_velocity
    return out


@dataclass(frozen=True)
class _TrialJob:
    index: int
    init: np.ndarray
    legs: dict
    noise: ProcessNoiseParams
    encoder_std: float
    prior: PriorStd
    gravity: float
    gate: float | None
    log: object
    gt: object


def _run_trial(job: _TrialJob) -> TrialResult:
    roll0, pitch0 = job.init[:2]
    v0 = job.init[2:].copy()
    res = TrialResult(job.index, math.degrees(roll0), math.degrees(pitch0), v0)
    yaw_true = roll_pitch_yaw(job.gt.R[0])[2]
    R0 = rotation_zyx(roll0, pitch0, yaw_true)
    odom = KinematicInertialOdometry(job.legs, job.noise, job.encoder_std, job.prior, job.gravity, job.gate)
    try:
        est = run(odom, job.log, job.gt.p[0], R0, v0)
    except (DivergenceError, SingularInnovationError, lie.AngleAtPiError) as exc:
        res.failure = f"{type(exc).__name__}: {exc}"
        return res
    e = np.array([roll_pitch_yaw(R)[:2] for R in est.R])
    g = np.array([roll_pitch_yaw(R)[:2] for R in job.gt.R])
    d = np.degrees(_wrap(e - g))
    res.t = est.t.copy()
    res.roll_err_deg = d[:, 0]
    res.pitch_err_deg = d[:, 1]
    res.vel_err = np.linalg.norm(est.v - job.gt.v, axis=1)
    return res


@dataclass
class StudyResult:
    settings: StudySettings
    trials: list[TrialResult]

    def settle_times(self) -> np.ndarray:
        s = self.settings
        return np.array([tr.settle_time(s.tilt_tol_deg, s.velocity_tol) for tr in self.trials])

    def summary(self) -> dict[str, float | int]:
        st = self.settle_times()
        ok = st <= self.settings.settle_time
        finite = st[np.isfinite(st)]
        return {
            "trials": len(self.trials),
            "converged": int(ok.sum()),
            "failed": sum(1 for tr in self.trials if tr.failure),
            "settle_time_max_s": float(finite.max()) if len(finite) == len(st) and len(st) else math.inf,
            "settle_time_median_s": float(np.median(st)) if len(st) else math.nan,
            "tilt_tol_deg": self.settings.tilt_tol_deg,
            "velocity_tol_mps": self.settings.velocity_tol,
            "settle_window_s": self.settings.settle_time,
        }


def convergence_study(
    log,
    gt,
    legs: dict[str, KinematicChain],
    settings: StudySettings = StudySettings(),
    noise: ProcessNoiseParams | None = None,
    encoder_std: float = math.radians(0.1),
    prior: PriorStd | None = None,
    gravity: float = GRAVITY,
    gate: float | None = None,
    workers: int = 1,
) -> StudyResult:
    """Re-run the filter on one log from randomized initial tilt and velocity.

    Each trial starts at the true position and yaw. Results are ordered by
    trial index whatever the number of worker processes.
    """
    inits = trial_initial_conditions(settings)
    noise = noise or ProcessNoiseParams()
    prior = prior or PriorStd()
    jobs = [
        _TrialJob(i, inits[i], legs, noise, encoder_std, prior, gravity, gate, log, gt)
        for i in range(settings.n_trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_trial, jobs))
    else:
        trials = [_run_trial(j) for j in jobs]
    return StudyResult(settings, trials)
