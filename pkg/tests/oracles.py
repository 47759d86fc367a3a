"""Independent reference computations shared by the tests.

Nothing here calls the closed forms under test: exponentials come from
matrix power series, Jacobians from the adjoint series or finite differences.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.transform import Rotation

from floatbase import lie, state as st
from floatbase.lgekf import MeasurementModel, ProcessModel
from floatbase.lie import Group

GROUPS = [Group.SO3, Group.SE3, Group.SE23, Group.T6]


def matrix_series_exp(A: np.ndarray, terms: int = 40) -> np.ndarray:
    out = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def ad_matrix(group: Group, x: np.ndarray) -> np.ndarray:
    """Matrix of y -> vee([hat(x), hat(y)]) built column by column."""
    X = lie.hat(group, x)
    n = group.dof
    A = np.zeros((n, n))
    for j in range(n):
        Y = lie.hat(group, np.eye(n)[j])
        A[:, j] = lie.vee(group, X @ Y - Y @ X)
    return A


def jacobian_series(ad: np.ndarray, terms: int = 31) -> np.ndarray:
    """sum_{k<terms} ad^k / (k+1)!"""
    out = np.zeros_like(ad)
    term = np.eye(len(ad))
    for k in range(terms):
        out = out + term / math.factorial(k + 1)
        term = term @ ad
    return out


def random_rotation(rng: np.random.Generator, max_angle: float = math.pi - 0.1) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return Rotation.from_rotvec(axis * rng.uniform(0, max_angle)).as_matrix()


def random_tangent(rng: np.random.Generator, group: Group, max_rot: float = math.pi - 0.1, scale: float = 1.0):
    x = rng.normal(size=group.dof) * scale
    if group is Group.T6:
        return x
    rot = slice(0, 3) if group is Group.SO3 else slice(3, 6)
    w = x[rot]
    n = np.linalg.norm(w)
    if n > 0:
        x[rot] = w / n * rng.uniform(0, max_rot)
    return x


def random_element(rng: np.random.Generator, group: Group) -> np.ndarray:
    """Built from matrix blocks, not from the exp under test."""
    if group is Group.T6:
        M = np.eye(7)
        M[:6, 6] = rng.normal(size=6)
        return M
    R = random_rotation(rng)
    if group is Group.SO3:
        return R
    M = np.eye(group.size)
    M[:3, :3] = R
    M[:3, 3:] = rng.normal(size=(3, group.size - 3))
    return M


def random_state(rng: np.random.Generator, spread: float = 1.0) -> st.EstimatorState:
    return st.EstimatorState(
        p=rng.normal(size=3) * spread,
        R=random_rotation(rng, 2.5),
        v=rng.normal(size=3) * spread,
        dl=rng.normal(size=3) * spread,
        Zl=random_rotation(rng, 2.5),
        dr=rng.normal(size=3) * spread,
        Zr=random_rotation(rng, 2.5),
        b=rng.normal(size=6) * 0.1,
    )


def central_difference(f, n: int, h: float = 1e-6) -> np.ndarray:
    """Jacobian of f: R^n -> R^m at 0 by central differences."""
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((np.asarray(f(e)) - np.asarray(f(-e))) / (2 * h))
    return np.column_stack(cols)


def kalman_predict(x, P, F, Q, u=None):
    x = F @ x + (0 if u is None else u)
    return x, F @ P @ F.T + Q


def kalman_update(x, P, H, N, z):
    S = H @ P @ H.T + N
    K = P @ H.T @ np.linalg.inv(S)
    x = x + K @ (z - H @ x)
    return x, (np.eye(len(x)) - K @ H) @ P


class LinearProcess(ProcessModel):
    """x' = A x + B u expressed as an increment on T(n)."""

    def __init__(self, A, B, Q):
        self.A, self.B, self.Q = A, B, Q

    def increment(self, x, u):
        return (self.A - np.eye(len(x))) @ x + self.B @ u

    def jacobian(self, x, u):
        return self.A - np.eye(len(x))

    def noise_cov(self, x, u):
        return self.Q


class LinearMeasurement(MeasurementModel):
    def __init__(self, H, N):
        self.H, self.N = H, N

    def predict(self, x):
        return self.H @ x

    def jacobian(self, x):
        return self.H

    def noise_cov(self):
        return self.N

    def residual(self, predicted, z):
        return z - predicted
