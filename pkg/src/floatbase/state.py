"""Composite estimator state SE_2(3) x SE(3) x SE(3) x T(6).

Tangent vectors have 27 entries in a fixed block order::

    [ e_p | e_R | e_v | e_dl | e_Zl | e_dr | e_Zr | e_ba e_bg ]
      0:3   3:6   6:9   9:12  12:15  15:18  18:21    21:27

Every covariance, process Jacobian and measurement Jacobian in the package
indexes its columns with the slices defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie

DIM = 27
MATRIX_SIZE = 20

P = slice(0, 3)
R = slice(3, 6)
V = slice(6, 9)
DL = slice(9, 12)
ZL = slice(12, 15)
DR = slice(15, 18)
ZR = slice(18, 21)
BA = slice(21, 24)
BG = slice(24, 27)
BIAS = slice(21, 27)
BASE = slice(0, 9)
LEFT = slice(9, 15)
RIGHT = slice(15, 21)

FOOT_SLICES = {"left": (DL, ZL), "right": (DR, ZR)}


@dataclass(frozen=True)
class EstimatorState:
    """Mean of the estimator: base extended pose, two foot poses, IMU biases.

    Arrays are treated as immutable; operations always return new states.
    """

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dl: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Zl: np.ndarray = field(default_factory=lambda: np.eye(3))
    dr: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Zr: np.ndarray = field(default_factory=lambda: np.eye(3))
    b: np.ndarray = field(default_factory=lambda: np.zeros(6))

    @property
    def ba(self) -> np.ndarray:
        return self.b[:3]

    @property
    def bg(self) -> np.ndarray:
        return self.b[3:]

    def foot(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(d_f, Z_f)`` for ``side`` in {"left", "right"}."""
        if side == "left":
            return self.dl, self.Zl
        if side == "right":
            return self.dr, self.Zr
        raise ValueError(f"unknown foot {side!r}")

    def replace(self, **kw) -> "EstimatorState":
        fields = dict(p=self.p, R=self.R, v=self.v, dl=self.dl, Zl=self.Zl, dr=self.dr, Zr=self.Zr, b=self.b)
        fields.update(kw)
        return EstimatorState(**fields)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in (self.p, self.R, self.v, self.dl, self.Zl, self.dr, self.Zr, self.b))


def identity() -> EstimatorState:
    return EstimatorState()


def state_exp(eps) -> EstimatorState:
    eps = np.asarray(eps, dtype=float)
    wR, wl, wr = eps[R], eps[ZL], eps[ZR]
    JR = lie.so3_left_jacobian(wR)
    Jl = lie.so3_left_jacobian(wl)
    Jr = lie.so3_left_jacobian(wr)
    return EstimatorState(
        p=JR @ eps[P],
        R=lie.so3_exp(wR),
        v=JR @ eps[V],
        dl=Jl @ eps[DL],
        Zl=lie.so3_exp(wl),
        dr=Jr @ eps[DR],
        Zr=lie.so3_exp(wr),
        b=eps[BIAS].copy(),
    )


def state_log(X: EstimatorState) -> np.ndarray:
    out = np.empty(DIM)
    w = lie.so3_log(X.R)
    Jinv = lie.so3_left_jacobian_inv(w)
    out[P] = Jinv @ X.p
    out[R] = w
    out[V] = Jinv @ X.v
    for (sd, sz), (d, Z) in zip((FOOT_SLICES["left"], FOOT_SLICES["right"]), ((X.dl, X.Zl), (X.dr, X.Zr))):
        wz = lie.so3_log(Z)
        out[sd] = lie.so3_left_jacobian_inv(wz) @ d
        out[sz] = wz
    out[BIAS] = X.b
    return out


def state_compose(X: EstimatorState, Y: EstimatorState) -> EstimatorState:
    return EstimatorState(
        p=X.R @ Y.p + X.p,
        R=X.R @ Y.R,
        v=X.R @ Y.v + X.v,
        dl=X.Zl @ Y.dl + X.dl,
        Zl=X.Zl @ Y.Zl,
        dr=X.Zr @ Y.dr + X.dr,
        Zr=X.Zr @ Y.Zr,
        b=X.b + Y.b,
    )


def state_inverse(X: EstimatorState) -> EstimatorState:
    Rt, Zlt, Zrt = X.R.T, X.Zl.T, X.Zr.T
    return EstimatorState(
        p=-Rt @ X.p,
        R=Rt,
        v=-Rt @ X.v,
        dl=-Zlt @ X.dl,
        Zl=Zlt,
        dr=-Zrt @ X.dr,
        Zr=Zrt,
        b=-X.b,
    )


def retract(X: EstimatorState, eps) -> EstimatorState:
    """``X o state_exp(eps)``."""
    return state_compose(X, state_exp(eps))


def state_adjoint(X: EstimatorState) -> np.ndarray:
    A = np.eye(DIM)
    A[BASE, BASE] = lie.se23_adjoint(X.R, X.p, X.v)
    A[LEFT, LEFT] = lie.se3_adjoint(X.Zl, X.dl)
    A[RIGHT, RIGHT] = lie.se3_adjoint(X.Zr, X.dr)
    return A


def state_left_jacobian(eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    J = np.eye(DIM)
    J[BASE, BASE] = lie.se23_left_jacobian(eps[BASE])
    for sl in (LEFT, RIGHT):
        # feet have zero process increment; J(0) = I exactly
        if np.any(eps[sl]):
            J[sl, sl] = lie.se3_left_jacobian(eps[sl])
    return J


# --------------------------------------------------------------------------
# 20x20 matrix form; used for validation, never in the filter loop

_B0, _L0, _R0, _T0 = 0, 5, 9, 13


def to_matrix(X: EstimatorState) -> np.ndarray:
    M = np.zeros((MATRIX_SIZE, MATRIX_SIZE))
    M[_B0:_B0 + 5, _B0:_B0 + 5] = np.eye(5)
    M[0:3, 0:3] = X.R
    M[0:3, 3] = X.p
    M[0:3, 4] = X.v
    M[_L0:_L0 + 4, _L0:_L0 + 4] = np.eye(4)
    M[5:8, 5:8] = X.Zl
    M[5:8, 8] = X.dl
    M[_R0:_R0 + 4, _R0:_R0 + 4] = np.eye(4)
    M[9:12, 9:12] = X.Zr
    M[9:12, 12] = X.dr
    M[_T0:, _T0:] = np.eye(7)
    M[13:19, 19] = X.b
    return M


def from_matrix(M: np.ndarray) -> EstimatorState:
    M = np.asarray(M, dtype=float)
    if M.shape != (MATRIX_SIZE, MATRIX_SIZE):
        raise ValueError(f"state matrix must be 20x20, got {M.shape}")
    return EstimatorState(
        p=M[0:3, 3].copy(),
        R=M[0:3, 0:3].copy(),
        v=M[0:3, 4].copy(),
        dl=M[5:8, 8].copy(),
        Zl=M[5:8, 5:8].copy(),
        dr=M[9:12, 12].copy(),
        Zr=M[9:12, 9:12].copy(),
        b=M[13:19, 19].copy(),
    )


def hat_state(eps) -> np.ndarray:
    """Lie algebra element of the composite group as a 20x20 matrix."""
    eps = np.asarray(eps, dtype=float)
    M = np.zeros((MATRIX_SIZE, MATRIX_SIZE))
    M[0:5, 0:5] = lie.hat(lie.Group.SE23, eps[BASE])
    M[5:9, 5:9] = lie.hat(lie.Group.SE3, eps[LEFT])
    M[9:13, 9:13] = lie.hat(lie.Group.SE3, eps[RIGHT])
    M[13:20, 13:20] = lie.hat(lie.Group.T6, eps[BIAS])
    return M


def vee_state(M: np.ndarray) -> np.ndarray:
    out = np.empty(DIM)
    out[BASE] = lie.vee(lie.Group.SE23, M[0:5, 0:5])
    out[LEFT] = lie.vee(lie.Group.SE3, M[5:9, 5:9])
    out[RIGHT] = lie.vee(lie.Group.SE3, M[9:13, 9:13])
    out[BIAS] = lie.vee(lie.Group.T6, M[13:20, 13:20])
    return out


# --------------------------------------------------------------------------


@dataclass
class Belief:
    """Concentrated Gaussian: ``X = mean o exp(e)``, ``e ~ N(0, cov)``."""

    mean: EstimatorState
    cov: np.ndarray

    def __post_init__(self):
        self.cov = np.asarray(self.cov, dtype=float)
        # the filter also runs on plain vectors (Euclidean groups) for testing
        n = DIM if isinstance(self.mean, EstimatorState) else np.size(self.mean)
        if self.cov.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}, got {self.cov.shape}")

    def check(self, sym_tol: float = 1e-10, eig_tol: float = 1e-10) -> None:
        """Raise ValueError if the covariance is not symmetric PSD."""
        asym = np.max(np.abs(self.cov - self.cov.T))
        if asym > sym_tol:
            raise ValueError(f"covariance asymmetric by {asym:.3e}")
        lo = np.linalg.eigvalsh(self.cov).min()
        if lo < -eig_tol:
            raise ValueError(f"covariance has negative eigenvalue {lo:.3e}")
