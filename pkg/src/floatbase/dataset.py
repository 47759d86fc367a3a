"""CSV files for sensor logs and trajectories.

Every file starts with one comma-separated header line naming the columns;
numbers are written with ``%.12g``. Rotations are exponential coordinates.

Sensor log columns::

    t, ax, ay, az, gx, gy, gz, s_1 .. s_n, contact_l, contact_r
    [, px, py, pz, rx, ry, rz, vx, vy, vz, <foot columns>]

Trajectory columns (ground truth and estimates)::

    t, px, py, pz, rx, ry, rz, vx, vy, vz, <foot columns>, bax .. bgz [, P_0 .. P_26]

Encoder columns hold the left leg's joints first, then the right leg's.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lie
from .kinematics import KinematicChain
from .simulator import FEET, SensorLog


class DatasetFormatError(ValueError):
    pass


IMU_COLS = ["t", "ax", "ay", "az", "gx", "gy", "gz"]
CONTACT_COLS = ["contact_l", "contact_r"]
BASE_COLS = ["px", "py", "pz", "rx", "ry", "rz", "vx", "vy", "vz"]
FOOT_COLS = [f"{q}{c}" for q in ("dl", "zl", "dr", "zr") for c in "xyz"]
BIAS_COLS = [f"{q}{c}" for q in ("ba", "bg") for c in "xyz"]
COV_COLS = [f"P_{i}" for i in range(27)]
TRUTH_COLS = BASE_COLS + FOOT_COLS

_ENC = re.compile(r"s_(\d+)$")


# --------------------------------------------------------------------------
# generic table


def write_table(path: str | Path, columns: list[str], data: np.ndarray) -> None:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError(f"table has {data.shape} values for {len(columns)} columns")
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    np.savetxt(buf, data, fmt="%.12g", delimiter=",", newline="\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header names and an (N, n_columns) array; malformed rows name their line."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines or not lines[0].strip():
        raise DatasetFormatError(f"{path}: missing header line")
    columns = [c.strip() for c in lines[0].split(",")]
    if len(set(columns)) != len(columns):
        raise DatasetFormatError(f"{path}: duplicate column names")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(columns):
            raise DatasetFormatError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    if not np.all(np.isfinite(data)):
        bad = int(np.nonzero(~np.all(np.isfinite(data), axis=1))[0][0])
        raise DatasetFormatError(f"{path}:{bad + 2}: non-finite value")
    if "t" in columns:
        t = data[:, columns.index("t")]
        dec = np.nonzero(np.diff(t) <= 0)[0]
        if len(dec):
            raise DatasetFormatError(f"{path}:{int(dec[0]) + 3}: timestamps must be strictly increasing")
    return columns, data


def _cols(columns: list[str], data: np.ndarray, names: list[str]) -> np.ndarray:
    try:
        idx = [columns.index(n) for n in names]
    except ValueError as exc:
        raise DatasetFormatError(f"missing column: {exc}") from None
    return data[:, idx]


def _rotvecs(R: np.ndarray) -> np.ndarray:
    return np.array([lie.so3_log(r) for r in R]).reshape(-1, 3)


def _rotations(w: np.ndarray) -> np.ndarray:
    return np.array([lie.so3_exp(x) for x in w]).reshape(-1, 3, 3)


# --------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryData:
    """Base and feet states over time, as stored in trajectory files."""

    t: np.ndarray
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray
    dl: np.ndarray
    Zl: np.ndarray
    dr: np.ndarray
    Zr: np.ndarray
    b: np.ndarray | None = None
    cov_diag: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)


def _truth_block(obj) -> np.ndarray:
    return np.hstack([
        obj.p, _rotvecs(obj.R), obj.v,
        obj.dl, _rotvecs(obj.Zl), obj.dr, _rotvecs(obj.Zr),
    ])


def _bias_of(obj) -> np.ndarray:
    b = getattr(obj, "b", None)
    if b is None:
        b = np.hstack([obj.ba, obj.bg])
    return np.asarray(b, dtype=float)


def write_trajectory(path: str | Path, traj) -> None:
    """Write ground truth or an estimate (``cov_diag`` columns when present)."""
    cols = ["t"] + TRUTH_COLS + BIAS_COLS
    blocks = [np.asarray(traj.t)[:, None], _truth_block(traj), _bias_of(traj)]
    cov = getattr(traj, "cov_diag", None)
    if cov is not None:
        cols += COV_COLS
        blocks.append(cov)
    write_table(path, cols, np.hstack(blocks))


def _split_truth(columns, data) -> dict[str, np.ndarray]:
    blk = _cols(columns, data, TRUTH_COLS)
    return dict(
        p=blk[:, 0:3], R=_rotations(blk[:, 3:6]), v=blk[:, 6:9],
        dl=blk[:, 9:12], Zl=_rotations(blk[:, 12:15]), dr=blk[:, 15:18], Zr=_rotations(blk[:, 18:21]),
    )


def read_trajectory(path: str | Path) -> TrajectoryData:
    columns, data = read_table(path)
    out = TrajectoryData(t=_cols(columns, data, ["t"])[:, 0], **_split_truth(columns, data))
    if all(c in columns for c in BIAS_COLS):
        out.b = _cols(columns, data, BIAS_COLS)
    if all(c in columns for c in COV_COLS):
        out.cov_diag = _cols(columns, data, COV_COLS)
    return out


# --------------------------------------------------------------------------
# sensor logs


@dataclass
class Dataset:
    """A parsed sensor log with encoders still concatenated."""

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    encoders: np.ndarray
    contact_l: np.ndarray
    contact_r: np.ndarray
    truth: TrajectoryData | None = None

    def __len__(self) -> int:
        return len(self.t)

    def sensor_log(self, legs: dict[str, KinematicChain]) -> SensorLog:
        n_l = legs["left"].dof
        n = n_l + legs["right"].dof
        if self.encoders.shape[1] != n:
            raise DatasetFormatError(f"dataset has {self.encoders.shape[1]} encoder columns, model needs {n}")
        enc = {"left": self.encoders[:, :n_l], "right": self.encoders[:, n_l:]}
        return SensorLog(self.t, self.accel, self.gyro, enc, self.contact_l, self.contact_r)


def write_dataset(path: str | Path, log: SensorLog, truth=None) -> None:
    enc = np.hstack([log.encoders[f] for f in FEET])
    cols = IMU_COLS + [f"s_{i + 1}" for i in range(enc.shape[1])] + CONTACT_COLS
    blocks = [log.t[:, None], log.accel, log.gyro, enc, log.contact_l[:, None], log.contact_r[:, None]]
    if truth is not None:
        cols += TRUTH_COLS
        blocks.append(_truth_block(truth))
    write_table(path, cols, np.hstack([np.asarray(b, dtype=float) for b in blocks]))


def read_dataset(path: str | Path) -> Dataset:
    columns, data = read_table(path)
    enc_idx = sorted((int(m.group(1)), i) for i, c in enumerate(columns) if (m := _ENC.match(c)))
    if [k for k, _ in enc_idx] != list(range(1, len(enc_idx) + 1)):
        raise DatasetFormatError(f"{path}: encoder columns must be s_1 .. s_n")
    imu = _cols(columns, data, IMU_COLS)
    contacts = _cols(columns, data, CONTACT_COLS)
    bad = np.nonzero(~np.isin(contacts, (0.0, 1.0)).all(axis=1))[0]
    if len(bad):
        raise DatasetFormatError(f"{path}:{int(bad[0]) + 2}: contact flags must be 0 or 1")
    ds = Dataset(
        t=imu[:, 0], accel=imu[:, 1:4], gyro=imu[:, 4:7],
        encoders=data[:, [i for _, i in enc_idx]],
        contact_l=contacts[:, 0].astype(bool), contact_r=contacts[:, 1].astype(bool),
    )
    if all(c in columns for c in TRUTH_COLS):
        ds.truth = TrajectoryData(t=ds.t, **_split_truth(columns, data))
    return ds
