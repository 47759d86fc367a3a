"""Closed-form operators for the matrix Lie groups SO(3), SE(3), SE_2(3) and T(6).

Group elements use their homogeneous matrix form:

* ``SO3``  -- 3x3 rotation ``R``.
* ``SE3``  -- 4x4 ``[[R, p], [0, 1]]``, tangent ordered ``(v, w)``.
* ``SE23`` -- 5x5 ``[[R, p, v], [0, 1, 0], [0, 0, 1]]``, tangent ordered
  ``(v, w, a)`` where ``v`` drives the position column and ``a`` the velocity
  column.
* ``T6``   -- 7x7 ``[[I6, b], [0, 1]]``, tangent ``b``.

The ``so3_*`` helpers work on raw 3-vectors / 3x3 matrices and are what the
filter hot path calls directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Below this rotation angle all trig coefficient ratios switch to Taylor
# series through theta**4; truncation error there is below 1e-16.
SMALL_ANGLE = 1e-2
# Principal-branch limit for the SO(3) logarithm.
PI_MARGIN = 1e-6
VEE_TOL = 1e-12

_I3 = np.eye(3)


class AngleAtPiError(ValueError):
    """Rotation angle too close to pi for an unambiguous logarithm."""


class GroupMismatchError(ValueError):
    """Operands belong to different groups or have the wrong shape."""


class Group(str, Enum):
    SO3 = "SO3"
    SE3 = "SE3"
    SE23 = "SE23"
    T6 = "T6"

    @property
    def dof(self) -> int:
        return _DOF[self]

    @property
    def size(self) -> int:
        return _SIZE[self]


_DOF = {Group.SO3: 3, Group.SE3: 6, Group.SE23: 9, Group.T6: 6}
_SIZE = {Group.SO3: 3, Group.SE3: 4, Group.SE23: 5, Group.T6: 7}
_BY_SIZE = {v: k for k, v in _SIZE.items()}


def group_of(X: np.ndarray) -> Group:
    """Infer the group of a matrix element from its shape."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] not in _BY_SIZE:
        raise GroupMismatchError(f"no supported group has elements of shape {X.shape}")
    return _BY_SIZE[X.shape[0]]


# --------------------------------------------------------------------------
# shared trig coefficients


def _coeffs(theta: float) -> tuple[float, float, float, float, float]:
    """Return (sin t/t, (1-cos t)/t^2, (t-sin t)/t^3, (t^2+2cos t-2)/(2t^4),
    (2t-3sin t+t cos t)/(2t^5))."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        t4 = t2 * t2
        return (
            1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
            1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0,
            1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0,
        )
    s, c = math.sin(theta), math.cos(theta)
    t2 = theta * theta
    return (
        s / theta,
        (1.0 - c) / t2,
        (theta - s) / (t2 * theta),
        (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2),
        (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta),
    )


def _jinv_coeff(theta: float) -> float:
    # 1/t^2 - (1 + cos t) / (2 t sin t)
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    return 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))


def _norm3(w) -> float:
    return math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])


# --------------------------------------------------------------------------
# SO(3) primitives


def skew(w) -> np.ndarray:
    """S(w), so that ``skew(w) @ y == cross(w, y)``."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_exp(w) -> np.ndarray:
    theta = _norm3(w)
    a, b, *_ = _coeffs(theta)
    S = skew(w)
    return _I3 + a * S + b * (S @ S)


def so3_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of ``R`` on the principal branch.

    Raises AngleAtPiError if the angle is within ``PI_MARGIN`` of pi.
    """
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    cos_t = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    theta = math.atan2(_norm3(w), cos_t)
    if theta >= math.pi - PI_MARGIN:
        raise AngleAtPiError(f"rotation angle {theta:.9f} rad is at the pi branch cut")
    return w / _coeffs(theta)[0]


def so3_left_jacobian(w) -> np.ndarray:
    """J(w) = I + (1-cos t)/t^2 S + (t-sin t)/t^3 S^2."""
    theta = _norm3(w)
    _, b, c, _, _ = _coeffs(theta)
    S = skew(w)
    return _I3 + b * S + c * (S @ S)


def so3_left_jacobian_inv(w) -> np.ndarray:
    theta = _norm3(w)
    S = skew(w)
    return _I3 - 0.5 * S + _jinv_coeff(theta) * (S @ S)


def q_matrix(rho, phi) -> np.ndarray:
    """Translation/rotation coupling block of the SE(3) left Jacobian.

    ``left_jacobian(SE3, (rho, phi)) = [[J(phi), Q(rho, phi)], [0, J(phi)]]``.
    """
    x, y, z = (float(t) for t in phi)
    r0, r1, r2 = (float(t) for t in rho)
    t2 = x * x + y * y + z * z
    _, _, c1, c2, c3 = _coeffs(math.sqrt(t2))
    # expanded with S(a) S(b) = b a^T - (a.b) I, entry by entry in scalars
    s = x * r0 + y * r1 + z * r2
    f = (x, y, z)
    r = (r0, r1, r2)
    c = (y * r2 - z * r1, z * r0 - x * r2, x * r1 - y * r0)
    a0 = 0.5 - 2.0 * c2 * t2
    a1 = (3.0 * c2 - c1) * s
    a2 = 2.0 * c3 * s
    a3 = a2 * t2 - 2.0 * c1 * s
    # skew entries: S(w)[i][j] = sign * w[k]
    Q = [[0.0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            Q[i][j] = c1 * (r[i] * f[j] + f[i] * r[j]) + c2 * (f[i] * c[j] - c[i] * f[j]) - a2 * f[i] * f[j]
        Q[i][i] += a3
    for i, j, k in ((2, 1, 0), (0, 2, 1), (1, 0, 2)):
        Q[i][j] += a0 * r[k] + a1 * f[k]
        Q[j][i] -= a0 * r[k] + a1 * f[k]
    return np.array(Q)


# --------------------------------------------------------------------------
# generic group interface


def _check_dim(group: Group, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (group.dof,):
        raise GroupMismatchError(f"{group.value} tangent must have shape ({group.dof},), got {x.shape}")
    return x


def _check_elem(group: Group, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (group.size, group.size):
        raise GroupMismatchError(f"{group.value} element must be {group.size}x{group.size}, got {X.shape}")
    return X


def identity(group: Group) -> np.ndarray:
    return np.eye(Group(group).size)


def hat(group: Group, x) -> np.ndarray:
    """Map tangent coordinates to the Lie algebra matrix."""
    group = Group(group)
    x = _check_dim(group, x)
    if group is Group.SO3:
        return skew(x)
    M = np.zeros((group.size, group.size))
    if group is Group.SE3:
        M[:3, :3] = skew(x[3:6])
        M[:3, 3] = x[:3]
    elif group is Group.SE23:
        M[:3, :3] = skew(x[3:6])
        M[:3, 3] = x[:3]
        M[:3, 4] = x[6:9]
    else:
        M[:6, 6] = x
    return M


def vee(group: Group, M) -> np.ndarray:
    """Inverse of :func:`hat`; rejects matrices outside the algebra pattern."""
    group = Group(group)
    M = _check_elem(group, M)
    expected = hat(group, _vee_unchecked(group, M))
    err = np.max(np.abs(M - expected))
    if err > VEE_TOL:
        raise ValueError(f"matrix deviates from the {group.value} algebra pattern by {err:.3e}")
    return _vee_unchecked(group, M)


def _vee_unchecked(group: Group, M: np.ndarray) -> np.ndarray:
    if group is Group.SO3:
        return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])
    if group is Group.SE3:
        return np.concatenate([M[:3, 3], _vee_unchecked(Group.SO3, M[:3, :3])])
    if group is Group.SE23:
        return np.concatenate([M[:3, 3], _vee_unchecked(Group.SO3, M[:3, :3]), M[:3, 4]])
    return M[:6, 6].copy()


def exp(group: Group, x) -> np.ndarray:
    group = Group(group)
    x = _check_dim(group, x)
    if group is Group.SO3:
        return so3_exp(x)
    X = np.eye(group.size)
    if group is Group.T6:
        X[:6, 6] = x
        return X
    w = x[3:6]
    J = so3_left_jacobian(w)
    X[:3, :3] = so3_exp(w)
    X[:3, 3] = J @ x[:3]
    if group is Group.SE23:
        X[:3, 4] = J @ x[6:9]
    return X


def log(group: Group, X) -> np.ndarray:
    group = Group(group)
    X = _check_elem(group, X)
    if group is Group.SO3:
        return so3_log(X)
    if group is Group.T6:
        return X[:6, 6].copy()
    w = so3_log(X[:3, :3])
    Jinv = so3_left_jacobian_inv(w)
    if group is Group.SE3:
        return np.concatenate([Jinv @ X[:3, 3], w])
    return np.concatenate([Jinv @ X[:3, 3], w, Jinv @ X[:3, 4]])


def compose(X, Y) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if group_of(X) is not group_of(Y):
        raise GroupMismatchError(f"cannot compose {group_of(X).value} with {group_of(Y).value}")
    return X @ Y


def inverse(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    group = group_of(X)
    if group is Group.SO3:
        return X.T.copy()
    Xi = np.eye(group.size)
    if group is Group.T6:
        Xi[:6, 6] = -X[:6, 6]
        return Xi
    Rt = X[:3, :3].T
    Xi[:3, :3] = Rt
    Xi[:3, 3] = -Rt @ X[:3, 3]
    if group is Group.SE23:
        Xi[:3, 4] = -Rt @ X[:3, 4]
    return Xi


def se3_adjoint(R: np.ndarray, p) -> np.ndarray:
    A = np.zeros((6, 6))
    A[:3, :3] = R
    A[:3, 3:] = skew(p) @ R
    A[3:, 3:] = R
    return A


def se23_adjoint(R: np.ndarray, p, v) -> np.ndarray:
    A = np.zeros((9, 9))
    A[:3, :3] = R
    A[:3, 3:6] = skew(p) @ R
    A[3:6, 3:6] = R
    A[6:9, 3:6] = skew(v) @ R
    A[6:9, 6:9] = R
    return A


def adjoint(group: Group, X) -> np.ndarray:
    """Matrix Ad(X) with ``Ad(X) a == vee(X hat(a) X^-1)``."""
    group = Group(group)
    X = _check_elem(group, X)
    if group is Group.SO3:
        return X.copy()
    if group is Group.T6:
        return np.eye(6)
    if group is Group.SE3:
        return se3_adjoint(X[:3, :3], X[:3, 3])
    return se23_adjoint(X[:3, :3], X[:3, 3], X[:3, 4])


def se3_left_jacobian(x) -> np.ndarray:
    rho, phi = x[:3], x[3:6]
    J = so3_left_jacobian(phi)
    out = np.zeros((6, 6))
    out[:3, :3] = J
    out[:3, 3:] = q_matrix(rho, phi)
    out[3:, 3:] = J
    return out


def se23_left_jacobian(x) -> np.ndarray:
    phi = x[3:6]
    J = so3_left_jacobian(phi)
    out = np.zeros((9, 9))
    out[:3, :3] = J
    out[:3, 3:6] = q_matrix(x[:3], phi)
    out[3:6, 3:6] = J
    out[6:9, 3:6] = q_matrix(x[6:9], phi)
    out[6:9, 6:9] = J
    return out


def left_jacobian(group: Group, x) -> np.ndarray:
    group = Group(group)
    x = _check_dim(group, x)
    if group is Group.SO3:
        return so3_left_jacobian(x)
    if group is Group.SE3:
        return se3_left_jacobian(x)
    if group is Group.SE23:
        return se23_left_jacobian(x)
    return np.eye(6)


def right_jacobian(group: Group, x) -> np.ndarray:
    return left_jacobian(group, -np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``(p, R)``; ``a @ b`` composes, tangent order ``(v, w)``."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.R @ other.p + self.p, self.R @ other.R)

    def inverse(self) -> "Pose":
        Rt = self.R.T
        return Pose(-Rt @ self.p, Rt)

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.R
        M[:3, 3] = self.p
        return M

    @classmethod
    def from_matrix(cls, M) -> "Pose":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, 3].copy(), M[:3, :3].copy())

    @classmethod
    def exp(cls, xi) -> "Pose":
        xi = np.asarray(xi, dtype=float)
        return cls(so3_left_jacobian(xi[3:]) @ xi[:3], so3_exp(xi[3:]))

    def log(self) -> np.ndarray:
        w = so3_log(self.R)
        return np.concatenate([so3_left_jacobian_inv(w) @ self.p, w])

    def adjoint(self) -> np.ndarray:
        return se3_adjoint(self.R, self.p)
