"""Transfer-RL joint radio and compute allocation for RAN slicing."""

from .actions import FULL_GRID, JointAction, action_from_index
from .config import ScenarioConfig, load_config, save_config
from .env import LearnerState, NetState, SliceEnv, TtiOutcome
from .agents import DqnAgent, EpsilonSchedule, QTable, ReplayBuffer, select_action, train_expert
from .ppf import PfState, ppf_allocate
from .transfer import (
    MappingSpec,
    NormalizedExpert,
    TransferSchedule,
    map_action,
    map_state,
    reduced_action_set,
    shaping_term,
)
from .store import ExpertArtifact, list_experts, load_expert, save_expert, select_experts
from .metrics import ccdf, confidence_interval, moving_average
from .runner import run_algorithms, run_experiment, run_single_bs, sweep, train_and_store_experts

__version__ = "0.1.0"
