import pytest

from slicetrl.actions import FULL_GRID, N_JOINT, JointAction, action_from_index
from slicetrl.errors import ContractViolation


def test_grid_has_121_joint_actions():
    assert N_JOINT == 121
    assert len(FULL_GRID) == 121
    assert len({a.index for a in FULL_GRID}) == 121


def test_index_roundtrip():
    for i in range(N_JOINT):
        a = action_from_index(i)
        assert a.index == i
        assert a == JointAction(a.radio_level, a.cpu_level)


def test_fractions():
    a = JointAction(3, 7)
    assert a.radio_frac == pytest.approx(0.3)
    assert a.cpu_frac == pytest.approx(0.7)


def test_out_of_grid_levels_rejected():
    with pytest.raises(ContractViolation):
        JointAction(11, 0)
    with pytest.raises(ContractViolation):
        JointAction(0, -1)
    with pytest.raises(ContractViolation):
        action_from_index(121)
