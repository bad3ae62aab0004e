"""Expert-to-learner knowledge transfer.

Two mechanisms over the same state/action mapping:
  * value shaping — expert Q-values at the mapped (state, action) enter the
    learner's stored reward, scaled by a decaying coefficient;
  * action reduction — the learner only explores the Cartesian product of
    each expert's top-k action levels at the mapped state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .actions import N_LEVELS, FULL_GRID, JointAction
from .agents import QTable
from .errors import ContractViolation

N_EXPERTS = 2  # radio, compute


@dataclass(frozen=True)
class MappingSpec:
    """Which learner-state components and which action component each
    expert owns. Selectors must be disjoint and cover all 4 components."""

    selectors: tuple = ((0, 1), (2, 3))
    action_components: tuple = ("radio", "cpu")

    def __post_init__(self):
        flat = [d for sel in self.selectors for d in sel]
        if sorted(flat) != [0, 1, 2, 3] or len(self.selectors) != N_EXPERTS:
            raise ContractViolation(
                f"selectors must be disjoint and cover components 0..3, got {self.selectors}"
            )


@dataclass
class TransferSchedule:
    """Shaping coefficient decay and per-expert weights."""

    explore_tti: int
    beta0: float = 0.5
    weights: tuple = (0.5, 0.5)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ContractViolation(f"expert weights must be nonnegative and not all zero: {w}")
        self.weights = tuple(w / w.sum())

    def beta(self, t: int) -> float:
        if self.explore_tti <= 0 or t >= self.explore_tti:
            return 0.0
        return self.beta0 * (1.0 - t / self.explore_tti)


class NormalizedExpert:
    """Expert table with its values min-max normalized into [0, 1].

    Normalization is frozen at construction. A constant table has no
    ranking information and normalizes to 0.5 everywhere (with a warning).
    """

    def __init__(self, table: QTable):
        self.table = table
        self.signature = table.signature
        lo, hi = float(table.table.min()), float(table.table.max())
        if hi - lo <= 0.0:
            warnings.warn(
                "expert table is constant (max == min); normalized values fall back to 0.5",
                RuntimeWarning,
                stacklevel=2,
            )
            self.qnorm = np.full_like(table.table, 0.5)
        else:
            self.qnorm = (table.table - lo) / (hi - lo)


def _bucket_centers(n_buckets: int) -> np.ndarray:
    return (np.arange(n_buckets) + 0.5) / n_buckets


def map_state(spec: MappingSpec, state_vec, expert: NormalizedExpert, expert_id: int) -> tuple:
    """Quantized expert state closest (Euclidean) to the selected learner
    components; ties go to the lexicographically smallest bucket tuple."""
    sel = spec.selectors[expert_id]
    if tuple(expert.signature) != tuple(sel):
        raise ContractViolation(
            f"expert signature {expert.signature} does not match selector {sel}"
        )
    shape = expert.table.state_shape
    vec = np.asarray(state_vec, dtype=float).ravel()
    out = []
    for comp, n in zip(sel, shape):
        centers = _bucket_centers(n)
        d = np.abs(centers - vec[comp])
        out.append(int(np.argmin(d)))  # argmin takes the first (lower) bucket on ties
    return tuple(out)


def map_action(spec: MappingSpec, action: JointAction, expert_id: int) -> int:
    """Project the joint action onto the expert's own component. The grids
    coincide, so the nearest expert action is the exact level."""
    comp = spec.action_components[expert_id]
    return action.radio_level if comp == "radio" else action.cpu_level


def shaping_term(
    sched: TransferSchedule,
    experts,
    spec: MappingSpec,
    state_vec,
    action: JointAction,
    t: int,
) -> float:
    """beta(t)-scaled, weight-averaged normalized expert value at the
    mapped (state, action). Always within [0, beta0]."""
    b = sched.beta(t)
    if b == 0.0:
        return 0.0
    total = 0.0
    for i, (ex, w) in enumerate(zip(experts, sched.weights)):
        s_e = map_state(spec, state_vec, ex, i)
        a_e = map_action(spec, action, i)
        total += w * float(ex.qnorm[s_e + (a_e,)])
    return b * total


def top_k_levels(ex: NormalizedExpert, s_e: tuple, k: int, weight: float = 1.0) -> list:
    """The expert's k best action levels at s_e, best first, ties to the
    lower level."""
    q = weight * ex.qnorm[s_e]
    order = sorted(range(len(q)), key=lambda a: (-q[a], a))
    return order[:k]


def reduced_action_set(experts, spec: MappingSpec, state_vec, k: int, weights=None) -> list:
    """Cartesian product of each expert's top-k levels at the mapped state,
    as JointActions in canonical (flat-index) order."""
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    k = min(k, N_LEVELS)
    if weights is None:
        weights = (1.0,) * len(experts)
    per_expert = []
    for i, (ex, w) in enumerate(zip(experts, weights)):
        s_e = map_state(spec, state_vec, ex, i)
        per_expert.append(top_k_levels(ex, s_e, k, w))
    radio_levels, cpu_levels = per_expert
    actions = [JointAction(rl, cl) for rl in radio_levels for cl in cpu_levels]
    actions.sort(key=lambda a: a.index)
    return actions


def reduced_action_indices(experts, spec, state_vec, k, weights=None) -> list:
    return [a.index for a in reduced_action_set(experts, spec, state_vec, k, weights)]
