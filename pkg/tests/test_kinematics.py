import math

import numpy as np
import pytest

from floatbase import lie
from floatbase.kinematics import (
    ChainFormatError, IKError, Joint, KinematicChain, fk_and_jacobian, forward_kinematics, inverse_kinematics,
    load_legs, parse_chains, relative_jacobian,
)
from floatbase.lie import Pose

Z_AXIS = np.array([0.0, 0.0, 1.0])


def single_joint(axis=Z_AXIS, foot=Pose()):
    return KinematicChain((Joint("j", Pose(), np.asarray(axis, dtype=float)),), foot)


PLANAR = """
joint a offset 0 0 0 0 0 0 axis 0 0 1
joint b offset 1 0 0 0 0 0 axis 0 0 1
joint c offset 1 0 0 0 0 0 axis 0 0 1
foot offset 1 0 0 0 0 0
"""


@pytest.fixture(scope="module")
def legs():
    return load_legs()


def test_zero_angles_compose_offsets(legs):
    chain = legs["left"]
    ref = Pose()
    for j in chain.joints:
        ref = ref @ j.offset
    ref = ref @ chain.foot
    T = forward_kinematics(chain, np.zeros(chain.dof))
    assert np.abs(T.matrix() - ref.matrix()).max() < 1e-15


def test_single_joint_quarter_turn():
    T = forward_kinematics(single_joint(), [math.pi / 2])
    assert np.allclose(T.R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)
    assert np.array_equal(T.p, np.zeros(3))


def test_planar_chain_reach():
    chain = parse_chains(PLANAR)["default"]
    T = forward_kinematics(chain, np.zeros(3))
    assert np.allclose(T.p, [3, 0, 0], atol=0) and np.array_equal(T.R, np.eye(3))
    T = forward_kinematics(chain, [math.pi / 2, 0, 0])
    assert np.allclose(T.p, [0, 3, 0], atol=1e-15)


def test_fk_is_pose_product(legs):
    rng = np.random.default_rng(0)
    chain = legs["right"]
    for _ in range(20):
        s = rng.uniform(-1, 1, chain.dof)
        ref = Pose()
        for j, q in zip(chain.joints, s):
            ref = ref @ j.offset @ Pose(np.zeros(3), lie.so3_exp(j.axis * q))
        ref = ref @ chain.foot
        assert np.abs(forward_kinematics(chain, s).matrix() - ref.matrix()).max() < 1e-14


def test_single_joint_jacobian_column():
    J = relative_jacobian(single_joint(), [0.3])
    assert np.allclose(J[:, 0], [0, 0, 0, 0, 0, 1], atol=1e-15)


@pytest.mark.parametrize("side", ["left", "right"])
def test_jacobian_finite_difference(legs, side):
    rng = np.random.default_rng(1)
    chain = legs[side]
    for _ in range(50):
        s = rng.uniform(-1.2, 1.2, chain.dof)
        d = rng.normal(size=chain.dof)
        d *= 1e-4 / np.linalg.norm(d)
        T0, J = fk_and_jacobian(chain, s)
        err = (T0.inverse() @ forward_kinematics(chain, s + d)).log() - J @ d
        assert np.linalg.norm(err) < 1e-6


def test_jacobian_error_is_quadratic(legs):
    rng = np.random.default_rng(2)
    chain = legs["left"]
    s = rng.uniform(-1, 1, chain.dof)
    d = rng.normal(size=chain.dof)
    T0, J = fk_and_jacobian(chain, s)
    errs = [np.linalg.norm((T0.inverse() @ forward_kinematics(chain, s + h * d)).log() - J @ (h * d))
            for h in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_jacobian_chain_causality():
    """Moving the last joint never moves the frames before it; a joint whose
    axis passes through the foot contributes no linear velocity."""
    chain = KinematicChain(
        (Joint("a", Pose(), Z_AXIS), Joint("b", Pose(np.array([1.0, 0, 0]), np.eye(3)), Z_AXIS)), Pose()
    )
    J = relative_jacobian(chain, [0.4, -0.2])
    assert np.allclose(J[:3, 1], 0, atol=1e-15)
    assert np.linalg.norm(J[:3, 0]) == pytest.approx(1.0)


def test_dimension_mismatch(legs):
    with pytest.raises(ValueError):
        forward_kinematics(legs["left"], np.zeros(5))
    with pytest.raises(ValueError):
        relative_jacobian(legs["left"], np.zeros(7))


def test_axis_must_be_unit():
    with pytest.raises(ChainFormatError):
        single_joint(axis=[0, 0, 1.1])


@pytest.mark.parametrize("text, fragment", [
    ("joint a offset 0 0 0 0 0 0 axis 0 0 1\n", "no foot"),
    ("joint a offset 0 0 0 0 0 axis 0 0 1\nfoot offset 0 0 0 0 0 0\n", "line 1"),
    ("joint a offset 0 0 0 0 0 x axis 0 0 1\nfoot offset 0 0 0 0 0 0\n", "line 1"),
    ("link a\n", "unknown record"),
    ("", "no chains"),
    ("foot offset 0 0 0 0 0 0\n", "at least one joint"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ChainFormatError, match=fragment):
        parse_chains(text)


def test_reference_model_geometry(legs):
    assert set(legs) == {"left", "right"}
    for side, y in (("left", 0.08), ("right", -0.08)):
        chain = legs[side]
        assert chain.dof == 6
        T = forward_kinematics(chain, np.zeros(6))
        assert np.allclose(T.p, [0, y, -0.5], atol=1e-15)


def test_ik_roundtrip(legs):
    rng = np.random.default_rng(3)
    chain = legs["left"]
    s_true = np.array([0.1, 0.05, -0.6, 1.1, -0.5, -0.05])
    target = forward_kinematics(chain, s_true)
    s = inverse_kinematics(chain, target, s_true + rng.normal(size=6) * 0.05)
    assert np.linalg.norm((forward_kinematics(chain, s).inverse() @ target).log()) < 1e-10


def test_ik_unreachable(legs):
    with pytest.raises(IKError):
        inverse_kinematics(legs["left"], Pose(np.array([0, 0, -2.0]), np.eye(3)), np.zeros(6), max_iter=30)
