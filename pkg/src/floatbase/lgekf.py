"""Discrete extended Kalman filter on matrix Lie groups.

The filter uses a concentrated Gaussian belief ``X = X_hat exp(e)`` with the
left-invariant error ``X_hat^-1 X``. It is parameterized by

* a :class:`GroupOps` bundle describing the state group (the composite
  estimator group by default, or a Euclidean group for testing),
* a :class:`ProcessModel` providing the left-trivialized increment
  ``increment(X, u)``, its Jacobian and the process noise covariance,
* a :class:`MeasurementModel` providing ``h(X)``, its Jacobian, the noise
  covariance and the log-residual ``log(h(X)^-1 z)`` on the observation group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import scipy.linalg

from . import state as st
from .state import Belief


class SingularInnovationError(np.linalg.LinAlgError):
    """Innovation covariance H P H^T + N is not positive definite."""


class DivergenceError(FloatingPointError):
    """The filter produced a non-finite quantity."""


@dataclass(frozen=True)
class GroupOps:
    dim: int
    exp: Callable[[np.ndarray], Any]
    compose: Callable[[Any, Any], Any]
    inverse: Callable[[Any], Any]
    adjoint: Callable[[Any], np.ndarray]
    left_jacobian: Callable[[np.ndarray], np.ndarray]


COMPOSITE = GroupOps(
    dim=st.DIM,
    exp=st.state_exp,
    compose=st.state_compose,
    inverse=st.state_inverse,
    adjoint=st.state_adjoint,
    left_jacobian=st.state_left_jacobian,
)


def euclidean(n: int) -> GroupOps:
    """The translation group T(n); elements are plain n-vectors."""
    eye = np.eye(n)
    return GroupOps(
        dim=n,
        exp=lambda e: np.asarray(e, dtype=float).copy(),
        compose=lambda x, y: x + y,
        inverse=lambda x: -x,
        adjoint=lambda x: eye,
        left_jacobian=lambda e: eye,
    )


class ProcessModel:
    """Interface for ``X_{k+1} = X_k exp(increment(X_k, u_k) + w_k)``."""

    def increment(self, X, u) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, X, u) -> np.ndarray:
        """d/de increment(X exp(e), u) at e = 0."""
        raise NotImplementedError

    def noise_cov(self, X, u) -> np.ndarray:
        raise NotImplementedError


class MeasurementModel:
    """Interface for ``z = h(X) exp(n)``, ``n ~ N(0, N)``."""

    def predict(self, X):
        raise NotImplementedError

    def jacobian(self, X) -> np.ndarray:
        raise NotImplementedError

    def noise_cov(self) -> np.ndarray:
        raise NotImplementedError

    def residual(self, predicted, z) -> np.ndarray:
        """``log(predicted^-1 z)`` on the observation group."""
        raise NotImplementedError


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def propagate(belief: Belief, model: ProcessModel, u, ops: GroupOps = COMPOSITE) -> Belief:
    X, P = belief.mean, belief.cov
    inc = np.asarray(model.increment(X, u), dtype=float)
    if not np.all(np.isfinite(inc)):
        raise DivergenceError("process increment is not finite")
    A = model.jacobian(X, u)
    Q = model.noise_cov(X, u)
    Jl = ops.left_jacobian(-inc)
    step = ops.exp(inc)
    # exp(-inc) is the inverse of exp(inc)
    F = ops.adjoint(ops.inverse(step)) + Jl @ A
    P_pred = F @ P @ F.T + Jl @ Q @ Jl.T
    return Belief(ops.compose(X, step), _symmetrize(P_pred))


@dataclass
class UpdateResult:
    belief: Belief
    correction: np.ndarray | None
    innovation: np.ndarray
    mahalanobis2: float
    accepted: bool


def update(
    belief: Belief,
    model: MeasurementModel,
    z,
    ops: GroupOps = COMPOSITE,
    gate: float | None = None,
) -> UpdateResult:
    """Measurement update.

    ``gate`` is an optional chi-square threshold on ``r^T S^-1 r``; when the
    innovation exceeds it the belief is returned unchanged and the result is
    flagged ``accepted=False``.
    """
    X, P = belief.mean, belief.cov
    H = model.jacobian(X)
    N = model.noise_cov()
    S = H @ P @ H.T + N
    try:
        cho = scipy.linalg.cho_factor(S, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularInnovationError(f"innovation covariance is not positive definite: {exc}") from exc
    r = np.asarray(model.residual(model.predict(X), z), dtype=float)
    d2 = float(r @ scipy.linalg.cho_solve(cho, r))
    if gate is not None and d2 > gate:
        return UpdateResult(belief, None, r, d2, False)
    K = scipy.linalg.cho_solve(cho, H @ P).T
    m = K @ r
    if not np.all(np.isfinite(m)):
        raise DivergenceError("state correction is not finite")
    Jl = ops.left_jacobian(-m)
    P_post = Jl @ ((np.eye(ops.dim) - K @ H) @ P) @ Jl.T
    return UpdateResult(Belief(ops.compose(X, ops.exp(m)), _symmetrize(P_post)), m, r, d2, True)


class LieGroupEKF:
    """Owns a mutable belief; one writer at a time."""

    def __init__(self, belief: Belief, ops: GroupOps = COMPOSITE, gate: float | None = None):
        self.belief = belief
        self.ops = ops
        self.gate = gate
        self.rejected = 0

    @property
    def mean(self):
        return self.belief.mean

    @property
    def cov(self) -> np.ndarray:
        return self.belief.cov

    def propagate(self, model: ProcessModel, u) -> None:
        self.belief = propagate(self.belief, model, u, self.ops)

    def update(self, model: MeasurementModel, z) -> np.ndarray | None:
        res = update(self.belief, model, z, self.ops, self.gate)
        if not res.accepted:
            self.rejected += 1
        self.belief = res.belief
        return res.correction
