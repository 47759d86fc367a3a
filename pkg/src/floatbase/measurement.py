"""Relative foot-pose measurements from leg forward kinematics.

A foot in contact is observed as the base-to-foot transform
``h_f(X) = (R^T (d_f - p), R^T Z_f)`` on SE(3); with both feet in contact the
two observations live on SE(3) x SE(3) and are stacked row-wise (left foot
rows first). Noise is left-trivialized, ordered ``(linear, angular)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lie
from . import state as st
from .lgekf import MeasurementModel
from .lie import Pose
from .process import ContactFlags
from .state import EstimatorState

FEET = ("left", "right")
# Added to every FK noise covariance so that rank-deficient leg Jacobians
# still give a positive-definite N.
NOISE_RIDGE = 1e-10


def predict_measurement(X: EstimatorState, foot: str) -> Pose:
    d, Z = X.foot(foot)
    Rt = X.R.T
    return Pose(Rt @ (d - X.p), Rt @ Z)


def measurement_jacobian(X: EstimatorState, foot: str) -> np.ndarray:
    d, Z = X.foot(foot)
    sd, sz = st.FOOT_SLICES[foot]
    ZtR = Z.T @ X.R
    H = np.zeros((6, st.DIM))
    H[0:3, st.P] = -ZtR
    H[0:3, st.R] = -Z.T @ lie.skew(X.p - d) @ X.R
    H[0:3, sd] = np.eye(3)
    H[3:6, st.R] = -ZtR
    H[3:6, sz] = np.eye(3)
    return H


def fk_noise_covariance(J_manip: np.ndarray, encoder_std) -> np.ndarray:
    """N = J diag(sigma^2) J^T + ridge I."""
    J_manip = np.asarray(J_manip, dtype=float)
    sig = np.broadcast_to(np.asarray(encoder_std, dtype=float), (J_manip.shape[1],))
    if np.any(sig < 0):
        raise ValueError("encoder std must be non-negative")
    return (J_manip * sig**2) @ J_manip.T + NOISE_RIDGE * np.eye(6)


def stack_double_support(H_l, N_l, H_r, N_r, z_l: Pose, z_r: Pose, contacts: ContactFlags | None = None):
    """Stack two single-support systems into one SE(3)^2 observation."""
    if contacts is not None and not (contacts.left and contacts.right):
        raise ValueError("double support requires both feet in contact")
    H = np.vstack([H_l, H_r])
    N = np.zeros((12, 12))
    N[:6, :6] = N_l
    N[6:, 6:] = N_r
    return H, N, (z_l, z_r)


@dataclass
class FootPoseMeasurement(MeasurementModel):
    """Measurement of one or two contact feet.

    ``z`` holds one :class:`Pose` per entry in ``feet``; ``cov`` is the stacked
    (block-diagonal) noise covariance.
    """

    feet: tuple[str, ...]
    z: tuple[Pose, ...]
    cov: np.ndarray

    def predict(self, X):
        return tuple(predict_measurement(X, f) for f in self.feet)

    def jacobian(self, X) -> np.ndarray:
        if len(self.feet) == 1:
            return measurement_jacobian(X, self.feet[0])
        return np.vstack([measurement_jacobian(X, f) for f in self.feet])

    def noise_cov(self) -> np.ndarray:
        return self.cov

    def residual(self, predicted, z) -> np.ndarray:
        return np.concatenate([(h.inverse() @ zi).log() for h, zi in zip(predicted, z)])


def contact_measurement(
    contacts: ContactFlags,
    fk_poses: dict[str, Pose],
    fk_covs: dict[str, np.ndarray],
) -> FootPoseMeasurement | None:
    """Build the update for the feet in contact; swing feet are dropped.

    Returns None when neither foot is in contact.
    """
    feet = tuple(f for f in FEET if contacts[f])
    if not feet:
        return None
    return measurement_for(feet, [fk_poses[f] for f in feet], [fk_covs[f] for f in feet])


def measurement_for(feet: Sequence[str], z: Sequence[Pose], covs: Sequence[np.ndarray]) -> FootPoseMeasurement:
    """Convenience constructor with explicit per-foot covariances."""
    N = np.zeros((6 * len(feet), 6 * len(feet)))
    for i, c in enumerate(covs):
        N[6 * i:6 * i + 6, 6 * i:6 * i + 6] = c
    return FootPoseMeasurement(tuple(feet), tuple(z), N)
