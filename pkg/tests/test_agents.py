import numpy as np
import pytest

from slicetrl.actions import JointAction
from slicetrl.agents import (
    DqnAgent,
    EpsilonSchedule,
    QTable,
    ReplayBuffer,
    select_action,
    train_expert,
)
from slicetrl.config import ScenarioConfig
from slicetrl.env import SliceEnv
from slicetrl.errors import ContractViolation
from tests.mdp_oracle import GAMMA, mdp_step, value_iteration


class TestQTable:
    def test_degenerate_rates_copy_reward(self):
        qt = QTable((2,), 2, alpha=1.0, gamma=0.0)
        qt.update((0,), 1, 0.7, (1,))
        assert qt.table[0, 1] == pytest.approx(0.7)

    def test_zero_rewards_keep_table_zero(self):
        qt = QTable((2,), 2)
        rng = np.random.default_rng(0)
        for _ in range(500):
            s, a = int(rng.integers(2)), int(rng.integers(2))
            qt.update((s,), a, 0.0, (int(rng.integers(2)),))
        assert np.array_equal(qt.table, np.zeros((2, 2)))

    def test_out_of_domain_state_rejected(self):
        qt = QTable((4, 4), 11)
        with pytest.raises(ContractViolation):
            qt.update((4, 0), 0, 0.0, (0, 0))
        with pytest.raises(ContractViolation):
            qt.update((0, 0), 11, 0.0, (0, 0))
        with pytest.raises(ContractViolation):
            qt.values((0,))

    def test_converges_to_value_iteration_fixed_point(self):
        q_star = value_iteration(tol=1e-9)
        qt = QTable((2,), 2, alpha=0.1, gamma=GAMMA)
        rng = np.random.default_rng(1)
        s = 0
        for _ in range(10_000):
            a = int(rng.integers(2))  # persistent exploration
            s2, r = mdp_step(s, a)
            qt.update((s,), a, r, (s2,))
            s = s2
        assert np.max(np.abs(qt.table - q_star)) < 1e-3

    def test_values_bounded_during_training(self):
        bound = 1.0 / (1.0 - GAMMA)
        qt = QTable((2,), 2, alpha=0.3, gamma=GAMMA)
        rng = np.random.default_rng(5)
        s = 0
        for _ in range(5000):
            a = int(rng.integers(2))
            s2, _ = mdp_step(s, a)
            r = float(rng.uniform(-1.0, 1.0))
            qt.update((s,), a, r, (s2,))
            assert np.all(np.abs(qt.table) <= bound + 1e-12)
            s = s2

    def test_constant_reward_shift_moves_values_not_argmax(self):
        def train(shift):
            qt = QTable((2,), 2, alpha=0.1, gamma=GAMMA)
            rng = np.random.default_rng(2)
            s = 0
            for _ in range(60_000):
                a = int(rng.integers(2))
                s2, r = mdp_step(s, a)
                qt.update((s,), a, r + shift, (s2,))
                s = s2
            return qt.table

        c = 0.3
        base, shifted = train(0.0), train(c)
        assert shifted - base == pytest.approx(c / (1.0 - GAMMA) * np.ones((2, 2)), abs=5e-3)
        assert np.array_equal(np.argmax(base, axis=1), np.argmax(shifted, axis=1))

    def test_text_roundtrip_exact(self):
        qt = QTable((4, 4), 11, signature=(0, 1))
        qt.table[:] = np.random.default_rng(3).normal(size=qt.table.shape)
        qt.train_ttis = 5000
        qt.final_mean_reward = 0.8173
        clone = QTable.from_text(qt.to_text())
        assert np.array_equal(clone.table, qt.table)
        assert clone.signature == (0, 1)
        assert clone.train_ttis == 5000
        assert clone.final_mean_reward == 0.8173


class TestSelectAction:
    def test_pure_greedy_takes_unique_max(self):
        rng = np.random.default_rng(0)
        q = np.array([0.1, 0.9, 0.3, 0.2])
        assert select_action(q, 0.0, [0, 1, 2, 3], rng) == 1

    def test_restriction_overrides_global_max(self):
        rng = np.random.default_rng(0)
        q = np.array([0.1, 0.9, 0.3, 0.2])
        assert select_action(q, 0.0, [0, 2, 3], rng) == 2

    def test_ties_break_to_lowest_index(self):
        rng = np.random.default_rng(0)
        q = np.array([0.5, 0.5, 0.5])
        assert select_action(q, 0.0, [0, 1, 2], rng) == 0
        assert select_action(q, 0.0, [1, 2], rng) == 1

    def test_empty_allowed_set_rejected(self):
        with pytest.raises(ContractViolation):
            select_action(np.zeros(4), 0.5, [], np.random.default_rng(0))

    def test_allowed_must_be_subset(self):
        with pytest.raises(ContractViolation):
            select_action(np.zeros(4), 0.5, [0, 7], np.random.default_rng(0))

    def test_full_exploration_is_uniform(self):
        rng = np.random.default_rng(11)
        allowed = [3, 10, 40, 100]
        n = 10_000
        counts = {a: 0 for a in allowed}
        for _ in range(n):
            counts[select_action(np.zeros(121), 1.0, allowed, rng)] += 1
        p = 1.0 / len(allowed)
        sigma = np.sqrt(n * p * (1 - p))
        for a in allowed:
            assert abs(counts[a] - n * p) < 3 * sigma


class TestReplayBuffer:
    def test_fifo_eviction_at_capacity(self):
        buf = ReplayBuffer(capacity=4)
        for i in range(6):
            buf.push(i)
        assert len(buf) == 4
        assert sorted(buf._items) == [2, 3, 4, 5]

    def test_sampling_is_uniform(self):
        buf = ReplayBuffer(capacity=8)
        for i in range(8):
            buf.push(i)
        rng = np.random.default_rng(4)
        counts = np.zeros(8)
        n = 16_000
        for item in buf.sample(n, rng):
            counts[item] += 1
        p = 1.0 / 8
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 4 * sigma)


class TestEpsilonSchedule:
    def test_linear_then_flat(self):
        sched = EpsilonSchedule(explore_steps=1000)
        assert sched.value(0) == 1.0
        assert sched.value(500) == pytest.approx(0.525)
        assert sched.value(1000) == 0.05
        assert sched.value(2500) == 0.05

    def test_monotone_nonincreasing(self):
        sched = EpsilonSchedule(explore_steps=333)
        vals = [sched.value(t) for t in range(700)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


class TestDqn:
    def _onehot(self, s):
        v = np.zeros(2)
        v[s] = 1.0
        return v

    def test_done_transition_bootstraps_to_reward_only(self):
        agent = DqnAgent(n_actions=2, state_dim=2, rng=0, warmup=1, batch_size=1)
        agent.replay.push((self._onehot(0), 1, 0.7, self._onehot(1), True))
        # with done=True the TD target must be the stored reward alone
        batch = agent.replay.sample(1, np.random.default_rng(0))
        s, a, r, s2, d = batch[0]
        q2, _ = agent.target._forward_batch(s2[None])
        target = r + agent.gamma * np.max(q2) * (not d)
        assert target == pytest.approx(0.7)

    def test_nonfinite_shaping_rejected(self):
        agent = DqnAgent(n_actions=2, state_dim=2, rng=0)
        with pytest.raises(ContractViolation):
            agent.dqn_step(self._onehot(0), 0, 0.5, self._onehot(1), False, shaping=np.nan)

    def test_recovers_tabular_greedy_policy_on_onehot_mdp(self):
        q_star = value_iteration()
        greedy_star = np.argmax(q_star, axis=1)
        agent = DqnAgent(n_actions=2, state_dim=2, rng=7)
        sched = EpsilonSchedule(explore_steps=800, end=0.1)
        rng = np.random.default_rng(3)
        s = 0
        for t in range(2500):
            a = agent.act(self._onehot(s), sched.value(t), [0, 1], rng)
            s2, r = mdp_step(s, a)
            agent.dqn_step(self._onehot(s), a, r, self._onehot(s2), False)
            s = s2
        greedy = [int(np.argmax(agent.main.forward(self._onehot(s)))) for s in range(2)]
        assert greedy == list(greedy_star)


class TestTrainExpert:
    @pytest.fixture(scope="class")
    def quick_cfg(self):
        return ScenarioConfig(n_tti=600, explore_tti=300, n_runs=2)

    def test_zero_training_ttis_give_zero_table(self, quick_cfg):
        table = train_expert(quick_cfg, "radio", seed=0, n_ttis=0)
        assert np.array_equal(table.table, np.zeros((4, 4, 11)))

    def test_radio_expert_signature_and_domain(self, quick_cfg):
        table = train_expert(quick_cfg, "radio", seed=0, n_ttis=400)
        assert table.signature == (0, 1)
        assert table.table.shape == (4, 4, 11)
        assert table.train_ttis == 400

    def test_unknown_resource_dim_rejected(self, quick_cfg):
        with pytest.raises(ContractViolation):
            train_expert(quick_cfg, "spectrum", seed=0)

    def test_trained_radio_expert_beats_fixed_even_split(self):
        cfg = ScenarioConfig(n_tti=600, explore_tti=300)
        table = train_expert(cfg, "radio", seed=42, n_ttis=2500)

        def evaluate(policy, seed):
            env = SliceEnv(cfg, seed)
            total = 0.0
            for _ in range(400):
                buckets = env.observe().buckets
                level = policy((buckets[0], buckets[1]))
                total += env.step(JointAction(level, 5)).reward
            return total / 400

        fixed, greedy = [], []
        for seed in range(10):
            fixed.append(evaluate(lambda s: 5, seed))
            greedy.append(evaluate(lambda s: int(np.argmax(table.values(s))), seed))
        assert np.mean(greedy) > np.mean(fixed)
