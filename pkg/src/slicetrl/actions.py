"""Joint action grid: (radio split, CPU split) over 11 levels each."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation

N_LEVELS = 11  # fractions 0.0, 0.1, ..., 1.0
N_JOINT = N_LEVELS * N_LEVELS


def level_to_frac(level: int) -> float:
    return level / (N_LEVELS - 1)


@dataclass(frozen=True, order=True)
class JointAction:
    """One allocation decision: fraction of RBs and of CPU given to URLLC.

    Levels index the grid {0.0, 0.1, ..., 1.0}; the remainder of each
    resource goes to the eMBB slice.
    """

    radio_level: int
    cpu_level: int

    def __post_init__(self):
        if not (0 <= self.radio_level < N_LEVELS and 0 <= self.cpu_level < N_LEVELS):
            raise ContractViolation(
                f"action levels must lie in [0, {N_LEVELS - 1}], got "
                f"({self.radio_level}, {self.cpu_level})"
            )

    @property
    def radio_frac(self) -> float:
        return level_to_frac(self.radio_level)

    @property
    def cpu_frac(self) -> float:
        return level_to_frac(self.cpu_level)

    @property
    def index(self) -> int:
        """Canonical flat index, radio-major."""
        return self.radio_level * N_LEVELS + self.cpu_level


def action_from_index(idx: int) -> JointAction:
    if not (0 <= idx < N_JOINT):
        raise ContractViolation(f"joint action index {idx} outside [0, {N_JOINT})")
    return JointAction(idx // N_LEVELS, idx % N_LEVELS)


FULL_GRID: tuple[JointAction, ...] = tuple(action_from_index(i) for i in range(N_JOINT))
