"""Serial revolute chains: forward kinematics, foot-frame Jacobian and IK.

Chain files are plain text, one joint per line::

    chain left
    joint l_hip offset px py pz rx ry rz axis ax ay az
    ...
    foot offset px py pz rx ry rz

Offsets are parent-to-joint poses with the rotation in exponential
coordinates (radians). ``#`` starts a comment. A file without ``chain`` lines
holds a single chain named ``default``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import lie
from .lie import Pose

AXIS_TOL = 1e-9
_I3 = np.eye(3)


class ChainFormatError(ValueError):
    pass


class IKError(RuntimeError):
    """Inverse kinematics did not converge."""


@dataclass(frozen=True)
class Joint:
    name: str
    offset: Pose
    axis: np.ndarray


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple[Joint, ...]
    foot: Pose

    def __post_init__(self):
        if not self.joints:
            raise ChainFormatError("a chain needs at least one joint")
        for j in self.joints:
            n = np.linalg.norm(j.axis)
            if abs(n - 1.0) > AXIS_TOL:
                raise ChainFormatError(f"joint {j.name}: axis norm {n} is not 1")
        axes = np.array([j.axis for j in self.joints], dtype=float)
        skews = np.array([lie.skew(a) for a in axes])
        object.__setattr__(self, "_axes", axes)
        object.__setattr__(self, "_skews", skews)
        object.__setattr__(self, "_skews2", skews @ skews)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def _check(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dof,):
            raise ValueError(f"expected {self.dof} joint values, got shape {s.shape}")
        return s


def _joint_rotation(S: np.ndarray, S2: np.ndarray, q: float) -> np.ndarray:
    # Rodrigues for a unit axis with precomputed S(axis) and S(axis)^2
    return _I3 + math.sin(q) * S + (1.0 - math.cos(q)) * S2


def _frames(chain: KinematicChain, s: np.ndarray):
    """Base-frame rotation/origin after each joint, then the foot pose."""
    Rs = np.empty((chain.dof, 3, 3))
    ps = np.empty((chain.dof, 3))
    R = np.eye(3)
    p = np.zeros(3)
    for i, (j, q) in enumerate(zip(chain.joints, s)):
        p = p + R @ j.offset.p
        R = R @ j.offset.R @ _joint_rotation(chain._skews[i], chain._skews2[i], q)
        Rs[i] = R
        ps[i] = p
    return Rs, ps, Pose(p + R @ chain.foot.p, R @ chain.foot.R)


def forward_kinematics(chain: KinematicChain, s) -> Pose:
    """Base-to-foot pose for joint angles ``s``."""
    return _frames(chain, chain._check(s))[2]


def fk_and_jacobian(chain: KinematicChain, s) -> tuple[Pose, np.ndarray]:
    """Foot pose and the 6 x n foot-frame Jacobian.

    Column i is the foot twist (linear; angular) per unit rate of joint i,
    expressed in the foot frame.
    """
    Rs, ps, foot = _frames(chain, chain._check(s))
    w = np.einsum("nij,nj->ni", Rs, chain._axes)  # joint axes in the base frame
    r = foot.p - ps
    lin = np.column_stack([
        w[:, 1] * r[:, 2] - w[:, 2] * r[:, 1],
        w[:, 2] * r[:, 0] - w[:, 0] * r[:, 2],
        w[:, 0] * r[:, 1] - w[:, 1] * r[:, 0],
    ])
    J = np.empty((6, chain.dof))
    J[:3] = foot.R.T @ lin.T
    J[3:] = foot.R.T @ w.T
    return foot, J


def relative_jacobian(chain: KinematicChain, s) -> np.ndarray:
    return fk_and_jacobian(chain, s)[1]


def inverse_kinematics(
    chain: KinematicChain,
    target: Pose,
    s0,
    tol: float = 1e-10,
    max_iter: int = 200,
    damping: float = 1e-6,
) -> np.ndarray:
    """Damped least-squares IK; converges when the pose log-residual norm < ``tol``."""
    s = np.array(s0, dtype=float)
    lam2 = damping * damping
    for _ in range(max_iter):
        T, J = fk_and_jacobian(chain, s)
        e = (T.inverse() @ target).log()
        if np.linalg.norm(e) < tol:
            return s
        s = s + J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), e)
    T = forward_kinematics(chain, s)
    res = np.linalg.norm((T.inverse() @ target).log())
    if res < tol:
        return s
    raise IKError(f"IK did not converge after {max_iter} iterations (residual {res:.3e})")


# --------------------------------------------------------------------------
# file format


def _floats(tokens, n, lineno):
    try:
        vals = [float(t) for t in tokens[:n]]
    except ValueError as exc:
        raise ChainFormatError(f"line {lineno}: {exc}") from None
    if len(vals) != n:
        raise ChainFormatError(f"line {lineno}: expected {n} numbers")
    return np.array(vals)


def _offset(tokens, lineno) -> Pose:
    v = _floats(tokens, 6, lineno)
    return Pose(v[:3], lie.so3_exp(v[3:]))


def parse_chains(text: str) -> dict[str, KinematicChain]:
    chains: dict[str, KinematicChain] = {}
    name = "default"
    joints: list[Joint] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "chain":
            if joints:
                raise ChainFormatError(f"line {lineno}: chain {name!r} has no foot line")
            if len(tok) != 2:
                raise ChainFormatError(f"line {lineno}: expected 'chain <name>'")
            name = tok[1]
        elif kind == "joint":
            if len(tok) != 13 or tok[2] != "offset" or tok[9] != "axis":
                raise ChainFormatError(f"line {lineno}: expected 'joint <name> offset x6 axis x3'")
            axis = _floats(tok[10:], 3, lineno)
            joints.append(Joint(tok[1], _offset(tok[3:9], lineno), axis))
        elif kind == "foot":
            if len(tok) != 8 or tok[1] != "offset":
                raise ChainFormatError(f"line {lineno}: expected 'foot offset x6'")
            if name in chains:
                raise ChainFormatError(f"line {lineno}: duplicate chain {name!r}")
            chains[name] = KinematicChain(tuple(joints), _offset(tok[2:], lineno))
            joints = []
        else:
            raise ChainFormatError(f"line {lineno}: unknown record {kind!r}")
    if joints:
        raise ChainFormatError(f"chain {name!r} has no foot line")
    if not chains:
        raise ChainFormatError("no chains found")
    return chains


def load_chains(path: str | Path) -> dict[str, KinematicChain]:
    return parse_chains(Path(path).read_text(encoding="utf-8"))


REFERENCE_MODEL = "reference_legs.chain"


def reference_model_path() -> Path:
    return Path(str(resources.files("floatbase") / "data" / REFERENCE_MODEL))


def load_legs(path: str | Path | None = None) -> dict[str, KinematicChain]:
    """Load a model with ``left`` and ``right`` leg chains (bundled one by default)."""
    chains = load_chains(path or reference_model_path())
    missing = {"left", "right"} - chains.keys()
    if missing:
        raise ChainFormatError(f"model lacks chains: {sorted(missing)}")
    return chains
