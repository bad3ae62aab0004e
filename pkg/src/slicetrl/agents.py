"""Tabular Q-learning experts and the DQN learner.

Experts are per-resource tabular agents trained with the other resource
pinned to an even split. The learner is a replay + target-network DQN over
the joint action grid; transfer variants plug in through the shaping term
and the allowed-action subset of dqn_step/select_action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import N_LEVELS, FULL_GRID, JointAction
from .config import ScenarioConfig
from .env import SliceEnv
from .errors import ContractViolation
from .nets import make_qnet, sync

GAMMA = 0.95
ALPHA_TABULAR = 0.1
EXPERT_TRAIN_TTIS = 5000
REPLAY_CAPACITY = 10_000
BATCH_SIZE = 32
WARMUP_TRANSITIONS = 200
TARGET_SYNC_PERIOD = 100
SEQ_LEN = 8  # replay sequence length for the recurrent learner

EPS_START = 1.0
EPS_END = 0.05

RADIO_DIM = "radio"
COMPUTE_DIM = "compute"
# learner-state components each expert reads
EXPERT_SIGNATURES = {RADIO_DIM: (0, 1), COMPUTE_DIM: (2, 3)}
FIXED_OTHER_LEVEL = 5  # 0.5 split for the dimension the expert does not control


@dataclass
class EpsilonSchedule:
    """Linear decay from EPS_START to EPS_END over explore_steps, then flat."""

    explore_steps: int
    start: float = EPS_START
    end: float = EPS_END

    def value(self, t: int) -> float:
        if t >= self.explore_steps:
            return self.end
        return self.start + (self.end - self.start) * (t / self.explore_steps)


class QTable:
    """Dense state-action value table over a small multi-index state space."""

    def __init__(self, state_shape, n_actions, alpha=ALPHA_TABULAR, gamma=GAMMA, signature=()):
        self.state_shape = tuple(state_shape)
        self.n_actions = int(n_actions)
        self.alpha = alpha
        self.gamma = gamma
        self.signature = tuple(signature)
        self.table = np.zeros(self.state_shape + (self.n_actions,))
        self.visits = np.zeros(self.state_shape + (self.n_actions,), dtype=np.int64)
        self.train_ttis = 0
        self.final_mean_reward = 0.0

    def _check_state(self, s):
        s = tuple(int(x) for x in np.atleast_1d(s))
        if len(s) != len(self.state_shape) or any(
            not (0 <= x < n) for x, n in zip(s, self.state_shape)
        ):
            raise ContractViolation(f"state {s} outside table domain {self.state_shape}")
        return s

    def values(self, s) -> np.ndarray:
        return self.table[self._check_state(s)]

    def update(self, s, a, r, s2) -> None:
        s = self._check_state(s)
        s2 = self._check_state(s2)
        if not (0 <= a < self.n_actions):
            raise ContractViolation(f"action {a} outside [0, {self.n_actions})")
        target = r + self.gamma * float(np.max(self.table[s2]))
        self.table[s + (a,)] += self.alpha * (target - self.table[s + (a,)])
        self.visits[s + (a,)] += 1

    # text exchange format: header lines then one "(s...) a value" row per entry
    def to_text(self) -> str:
        lines = [
            f"signature={','.join(str(d) for d in self.signature)}",
            f"state_shape={','.join(str(n) for n in self.state_shape)}",
            f"n_actions={self.n_actions}",
            f"gamma={self.gamma!r}",
            f"train_ttis={self.train_ttis}",
            f"final_mean_reward={self.final_mean_reward!r}",
        ]
        for idx in np.ndindex(*self.state_shape):
            for a in range(self.n_actions):
                s_txt = ",".join(str(i) for i in idx)
                lines.append(f"{s_txt} {a} {float(self.table[idx + (a,)])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QTable":
        header = {}
        rows = []
        for line in text.strip().splitlines():
            if "=" in line and " " not in line:
                k, v = line.split("=", 1)
                header[k] = v
            else:
                rows.append(line)
        signature = tuple(int(x) for x in header["signature"].split(",") if x != "")
        shape = tuple(int(x) for x in header["state_shape"].split(","))
        qt = cls(
            shape,
            int(header["n_actions"]),
            gamma=float(header["gamma"]),
            signature=signature,
        )
        qt.train_ttis = int(header["train_ttis"])
        qt.final_mean_reward = float(header["final_mean_reward"])
        for row in rows:
            s_txt, a, v = row.split(" ")
            idx = tuple(int(i) for i in s_txt.split(","))
            qt.table[idx + (int(a),)] = float(v)
        return qt


def select_action(qvalues, eps, allowed, rng) -> int:
    """Epsilon-greedy over an allowed subset of the action grid.

    Returns an index into the full space; ties break to the lowest allowed
    index. The epsilon draw happens on every call so restricted and full
    variants consume the RNG identically.
    """
    if len(allowed) == 0:
        raise ContractViolation("allowed action set is empty")
    qvalues = np.asarray(qvalues)
    if max(allowed) >= qvalues.shape[0] or min(allowed) < 0:
        raise ContractViolation("allowed set is not a subset of the action grid")
    if rng.random() < eps:
        return int(allowed[rng.integers(len(allowed))])
    sub = qvalues[list(allowed)]
    return int(allowed[int(np.argmax(sub))])


class ReplayBuffer:
    """Fixed-capacity ring with FIFO eviction and uniform sampling."""

    def __init__(self, capacity=REPLAY_CAPACITY):
        self.capacity = capacity
        self._items = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def push(self, item):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size, rng):
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


class DqnAgent:
    """DQN with replay and a periodically synced target network.

    The same agent runs plain DQN and both transfer variants: reward
    shaping enters through the `shaping` argument of dqn_step and action
    restriction through the `allowed` argument of act.
    """

    def __init__(
        self,
        n_actions=len(FULL_GRID),
        state_dim=4,
        net_kind="dense",
        hidden=30,
        rng=None,
        gamma=GAMMA,
        batch_size=BATCH_SIZE,
        warmup=WARMUP_TRANSITIONS,
        sync_period=TARGET_SYNC_PERIOD,
    ):
        rng = np.random.default_rng(rng)
        self.rng = rng
        self.gamma = gamma
        self.batch_size = batch_size
        self.warmup = warmup
        self.sync_period = sync_period
        self.n_actions = n_actions
        self.kind = net_kind
        self.main = make_qnet(net_kind, state_dim, n_actions, hidden=hidden, rng=rng)
        self.target = make_qnet(net_kind, state_dim, n_actions, hidden=hidden, rng=rng)
        sync(self.target, self.main)
        self.replay = ReplayBuffer()
        self.train_steps = 0
        self._window = []  # trailing transitions for sequence replay

    def act(self, state_vec, eps, allowed, rng=None) -> int:
        q = self.main.act_values(state_vec)
        return select_action(q, eps, allowed, rng if rng is not None else self.rng)

    def dqn_step(self, s, a, r, s2, done, shaping=0.0):
        """Store the shaped transition and run one training step once the
        warm-up count is reached. Returns the pre-step loss, or None."""
        if not np.isfinite(shaping):
            raise ContractViolation(f"non-finite shaping term {shaping!r}")
        tr = (np.asarray(s, dtype=float), int(a), float(r) + float(shaping), np.asarray(s2, dtype=float), bool(done))
        if self.kind == "lstm":
            self._window.append(tr)
            if len(self._window) > SEQ_LEN:
                self._window.pop(0)
            if len(self._window) == SEQ_LEN:
                self.replay.push(tuple(self._window))
        else:
            self.replay.push(tr)
        if len(self.replay) < self.warmup:
            return None
        loss = self._train_batch()
        self.train_steps += 1
        if self.train_steps % self.sync_period == 0:
            sync(self.target, self.main)
        return loss

    def _train_batch(self):
        batch = self.replay.sample(self.batch_size, self.rng)
        if self.kind == "lstm":
            return self._train_batch_seq(batch)
        S = np.stack([t[0] for t in batch])
        A = np.array([t[1] for t in batch])
        R = np.array([t[2] for t in batch])
        S2 = np.stack([t[3] for t in batch])
        D = np.array([t[4] for t in batch])
        q2, _ = self.target._forward_batch(S2)
        targets = R + self.gamma * np.max(q2, axis=1) * (~D)
        return self.main.train_step(S, A, targets)

    def _train_batch_seq(self, batch):
        B, T = len(batch), SEQ_LEN
        S = np.stack([[tr[0] for tr in seq] for seq in batch])       # (B,T,4)
        A = np.array([[tr[1] for tr in seq] for seq in batch])
        R = np.array([[tr[2] for tr in seq] for seq in batch])
        S2 = np.stack([[tr[3] for tr in seq] for seq in batch])
        D = np.array([[tr[4] for tr in seq] for seq in batch])
        q2 = self.target.seq_values(S2)
        targets = R + self.gamma * np.max(q2, axis=2) * (~D)
        return self.main.train_step(S, A, targets)


def train_expert(
    cfg: ScenarioConfig,
    resource_dim: str,
    seed,
    n_ttis: int = EXPERT_TRAIN_TTIS,
    alpha: float = ALPHA_TABULAR,
    gamma: float = GAMMA,
) -> QTable:
    """Train a single-resource tabular expert on its own environment.

    The expert controls one split level while the other resource stays at
    an even split, and it observes only its own resource's two slice
    fills (quantized). Rewards over the last fifth of training are stored
    as the artifact's quality score.
    """
    if resource_dim not in EXPERT_SIGNATURES:
        raise ContractViolation(f"resource_dim must be one of {sorted(EXPERT_SIGNATURES)}")
    sig = EXPERT_SIGNATURES[resource_dim]
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    env_ss, agent_ss = ss.spawn(2)
    env = SliceEnv(cfg, env_ss)
    rng = np.random.default_rng(agent_ss)
    table = QTable((4, 4), N_LEVELS, alpha=alpha, gamma=gamma, signature=sig)
    sched = EpsilonSchedule(cfg.explore_tti)

    tail = max(n_ttis // 5, 1)
    rewards_tail = []
    s = tuple(env.observe().buckets[d] for d in sig)
    for t in range(n_ttis):
        a = select_action(table.values(s), sched.value(t), range(N_LEVELS), rng)
        if resource_dim == RADIO_DIM:
            action = JointAction(a, FIXED_OTHER_LEVEL)
        else:
            action = JointAction(FIXED_OTHER_LEVEL, a)
        out = env.step(action)
        s2 = tuple(env.observe().buckets[d] for d in sig)
        table.update(s, a, out.reward, s2)
        s = s2
        if t >= n_ttis - tail:
            rewards_tail.append(out.reward)
    table.train_ttis = n_ttis
    table.final_mean_reward = float(np.mean(rewards_tail)) if rewards_tail else 0.0
    return table
