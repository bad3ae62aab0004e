"""Experiment execution: per-BS run loops for the four allocation
strategies, run aggregation across base stations and seeds, CSV output.

Runs are embarrassingly parallel; each (seed, BS) pair gets its own
SeedSequence-derived streams so results are independent of worker layout
and merge deterministically.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .actions import N_JOINT, N_LEVELS, action_from_index
from .agents import DqnAgent, EpsilonSchedule, select_action
from .config import ScenarioConfig
from .env import SliceEnv
from .errors import ContractViolation, MissingExpertError
from .metrics import (
    AggregateStats,
    ccdf,
    confidence_interval,
    moving_average,
    time_to_fraction_of_final,
)
from .ppf import PfState, ppf_allocate
from .store import ExpertArtifact, list_experts, save_expert, select_experts
from .transfer import (
    MappingSpec,
    NormalizedExpert,
    TransferSchedule,
    reduced_action_indices,
    shaping_term,
)
from .agents import COMPUTE_DIM, RADIO_DIM, train_expert

ALGORITHMS = ("qtdrl", "atdrl", "dqn", "ppf")
FULL_INDICES = list(range(N_JOINT))
LEARNER_STATE_DIMS = (0, 1, 2, 3)

RUN_METRIC_KEYS = (
    "final_ma_reward",
    "t90_tti",
    "urllc_delay_ms_mean",
    "p_delay_gt_1ms",
    "embb_throughput_mbps_mean",
)


@dataclass
class BsResult:
    rewards: np.ndarray
    delays_ms: list
    embb_bits_processed: float
    drops: int
    actions: list


@dataclass
class RunRecord:
    algo: str
    seed_index: int
    rewards: np.ndarray          # per-TTI, averaged over base stations
    delays_ms: np.ndarray        # pooled over base stations
    embb_bits_processed: float   # summed over base stations
    drops: int
    n_bs: int
    n_tti: int
    tti_s: float

    def metrics(self) -> dict:
        if self.delays_ms.size:
            delay_mean = float(np.mean(self.delays_ms))
            p_gt_1ms = float(np.mean(self.delays_ms > 1.0))
        else:
            delay_mean, p_gt_1ms = float("nan"), float("nan")
        return {
            "final_ma_reward": float(moving_average(self.rewards)[-1]),
            "t90_tti": float(time_to_fraction_of_final(self.rewards)),
            "urllc_delay_ms_mean": delay_mean,
            "p_delay_gt_1ms": p_gt_1ms,
            "embb_throughput_mbps_mean": self.embb_bits_processed
            / (self.n_bs * self.n_tti * self.tti_s * 1e6),
        }


def run_single_bs(cfg: ScenarioConfig, algo: str, seed_seq, experts=None,
                  beta0: float = 0.5, top_k=None) -> BsResult:
    """One base station for one full episode."""
    if algo not in ALGORITHMS:
        raise ContractViolation(f"unknown algorithm {algo!r}; pick one of {ALGORITHMS}")
    if not isinstance(seed_seq, np.random.SeedSequence):
        seed_seq = np.random.SeedSequence(seed_seq)
    env_ss, agent_ss = seed_seq.spawn(2)
    env = SliceEnv(cfg, env_ss)
    rewards = np.empty(cfg.n_tti)
    delays, actions = [], []
    embb_bits = 0.0
    drops = 0

    if algo == "ppf":
        pf = PfState.fresh(env.n_ue)
        for t in range(cfg.n_tti):
            dec = ppf_allocate(env, pf)
            out = env.step_alloc(dec.per_ue_rbs, dec.cpu_frac)
            pf.commit(dec, cfg.tti_s)
            rewards[t] = out.reward
            delays.extend(out.urllc_delay_samples)
            embb_bits += out.embb_bits_processed
            drops += out.urllc_drops
            actions.append(-1)
        return BsResult(rewards, delays, embb_bits, drops, actions)

    spec = MappingSpec()
    schedule = TransferSchedule(cfg.explore_tti, beta0=beta0)
    if algo in ("qtdrl", "atdrl"):
        if experts is None:
            raise MissingExpertError(f"{algo} needs trained experts; run 'slicetrl train-experts'")
        experts = tuple(e if isinstance(e, NormalizedExpert) else NormalizedExpert(e) for e in experts)
    k = cfg.atdrl_top_k if top_k is None else top_k

    agent = DqnAgent(net_kind=cfg.net_kind, rng=agent_ss)
    eps_sched = EpsilonSchedule(cfg.explore_tti)
    obs = env.observe()
    for t in range(cfg.n_tti):
        if algo == "atdrl":
            allowed = reduced_action_indices(experts, spec, obs.vec, k, schedule.weights)
        else:
            allowed = FULL_INDICES
        a_idx = agent.act(obs.vec, eps_sched.value(t), allowed)
        action = action_from_index(a_idx)
        out = env.step(action)
        obs2 = env.observe()
        shaping = 0.0
        if algo == "qtdrl":
            shaping = shaping_term(schedule, experts, spec, obs.vec, action, t)
        agent.dqn_step(obs.vec, a_idx, out.reward, obs2.vec, t == cfg.n_tti - 1, shaping)
        obs = obs2
        rewards[t] = out.reward
        delays.extend(out.urllc_delay_samples)
        embb_bits += out.embb_bits_processed
        drops += out.urllc_drops
        actions.append(a_idx)
    return BsResult(rewards, delays, embb_bits, drops, actions)


def run_one(cfg: ScenarioConfig, algo: str, seed_base: int, run_idx: int,
            expert_tables=None, beta0: float = 0.5, top_k=None) -> RunRecord:
    """One run = cfg.n_bs independent base stations under one seed."""
    experts = None
    if expert_tables is not None:
        experts = tuple(NormalizedExpert(t) for t in expert_tables)
    per_bs = [
        run_single_bs(
            cfg, algo, np.random.SeedSequence((seed_base, run_idx, bs)),
            experts=experts, beta0=beta0, top_k=top_k,
        )
        for bs in range(cfg.n_bs)
    ]
    rewards = np.mean([r.rewards for r in per_bs], axis=0)
    delays = np.concatenate([np.asarray(r.delays_ms, dtype=float) for r in per_bs]) \
        if any(r.delays_ms for r in per_bs) else np.empty(0)
    return RunRecord(
        algo=algo,
        seed_index=run_idx,
        rewards=rewards,
        delays_ms=delays,
        embb_bits_processed=sum(r.embb_bits_processed for r in per_bs),
        drops=sum(r.drops for r in per_bs),
        n_bs=cfg.n_bs,
        n_tti=cfg.n_tti,
        tti_s=cfg.tti_s,
    )


def _run_one_args(args):
    return run_one(*args)


def run_experiment(cfg: ScenarioConfig, algo: str, seed_base=None, expert_tables=None,
                   n_jobs=None, beta0: float = 0.5, top_k=None) -> list:
    """All cfg.n_runs runs of one algorithm, parallel across runs."""
    seed_base = cfg.rng_seed if seed_base is None else seed_base
    arglist = [
        (cfg, algo, seed_base, i, expert_tables, beta0, top_k) for i in range(cfg.n_runs)
    ]
    jobs = n_jobs if n_jobs is not None else min(os.cpu_count() or 1, cfg.n_runs)
    if jobs <= 1 or cfg.n_runs == 1:
        records = [_run_one_args(a) for a in arglist]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one_args, arglist))
    records.sort(key=lambda r: r.seed_index)
    return records


# ---------- expert lifecycle ----------

def train_and_store_experts(cfg: ScenarioConfig, store_path, n_ttis=None) -> list:
    """Train the radio and compute experts for this configuration and file
    them in the knowledge store. Returns the new task ids."""
    ids = []
    kw = {} if n_ttis is None else {"n_ttis": n_ttis}
    for i, dim in enumerate((RADIO_DIM, COMPUTE_DIM)):
        table = train_expert(cfg, dim, np.random.SeedSequence((cfg.rng_seed, 9000 + i)), **kw)
        art = ExpertArtifact.from_table(f"{dim}-{cfg.digest()}", dim, table, cfg.digest())
        ids.append(save_expert(store_path, art))
    return ids


def load_expert_pair(store_path) -> tuple:
    """Best-ranked radio and compute expert tables from the store, in the
    (radio, compute) order the transfer mapping expects."""
    ranked = select_experts(store_path, LEARNER_STATE_DIMS, N_LEVELS)
    pair = {}
    for art in ranked:
        for dim, sig in ((RADIO_DIM, (0, 1)), (COMPUTE_DIM, (2, 3))):
            if art.signature == sig and dim not in pair:
                pair[dim] = art.table
    missing = [d for d in (RADIO_DIM, COMPUTE_DIM) if d not in pair]
    if missing:
        raise MissingExpertError(
            f"store {store_path} has no {'/'.join(missing)} expert "
            f"(found: {list_experts(store_path) or 'none'}); run 'slicetrl train-experts' first"
        )
    return pair[RADIO_DIM], pair[COMPUTE_DIM]


# ---------- CSV emission ----------

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_run_outputs(out_dir, algo: str, records: list, timeout_ms: float = 50.0) -> None:
    out = Path(out_dir)
    rows = []
    for r in records:
        m = r.metrics()
        rows.append(
            [algo, r.seed_index] + [m[k] for k in RUN_METRIC_KEYS] + [r.drops, int(r.delays_ms.size)]
        )
    write_csv(
        out / f"runs_{algo}.csv",
        ["algo", "seed_index", *RUN_METRIC_KEYS, "urllc_drops", "n_delay_samples"],
        rows,
    )

    mas = np.stack([moving_average(r.rewards) for r in records])
    mean = mas.mean(axis=0)
    if len(records) >= 2:
        from scipy import stats as _st

        tq = float(_st.t.ppf(0.975, len(records) - 1))
        hw = tq * mas.std(axis=0, ddof=1) / np.sqrt(len(records))
    else:
        hw = np.zeros_like(mean)
    write_csv(
        out / f"convergence_{algo}.csv",
        ["tti", "reward_ma_mean", "reward_ma_hw95"],
        [[t + 1, mean[t], hw[t]] for t in range(mean.size)],
    )

    pooled = np.concatenate([r.delays_ms for r in records]) if records else np.empty(0)
    if pooled.size:
        grid = np.arange(0.0, timeout_ms + 0.25, 0.25)
        pairs = ccdf(pooled, grid)
        write_csv(out / f"ccdf_{algo}.csv", ["threshold_ms", "ccdf"], pairs)


def write_aggregate(out_dir, per_algo_records: dict) -> None:
    rows = []
    for algo in ALGORITHMS:
        if algo not in per_algo_records:
            continue
        metrics = [r.metrics() for r in per_algo_records[algo]]
        agg = AggregateStats.from_rows(metrics, RUN_METRIC_KEYS)
        row = [algo, agg.n]
        for k in RUN_METRIC_KEYS:
            row += [agg.mean[k], agg.halfwidth[k]]
        rows.append(row)
    header = ["algo", "n_runs"]
    for k in RUN_METRIC_KEYS:
        header += [f"{k}_mean", f"{k}_hw95"]
    write_csv(Path(out_dir) / "aggregate.csv", header, rows)


def run_algorithms(cfg: ScenarioConfig, algos, out_dir, store_path=None, seed_base=None,
                   n_jobs=None) -> dict:
    """Run several strategies under one config and write all CSVs."""
    expert_tables = None
    if any(a in ("qtdrl", "atdrl") for a in algos):
        expert_tables = load_expert_pair(store_path)
    per_algo = {}
    for algo in algos:
        tables = expert_tables if algo in ("qtdrl", "atdrl") else None
        records = run_experiment(cfg, algo, seed_base=seed_base, expert_tables=tables, n_jobs=n_jobs)
        write_run_outputs(out_dir, algo, records, timeout_ms=cfg.pkt_timeout_ms)
        per_algo[algo] = records
    write_aggregate(out_dir, per_algo)
    return per_algo


SWEEP_AXES = {"urllc_load": "urllc_load_mbps", "mec_capacity": "mec_capacity_gcps"}

SWEEP_METRICS = ("urllc_delay_ms_mean", "embb_throughput_mbps_mean", "p_delay_gt_1ms")


def sweep(cfg: ScenarioConfig, axis: str, points, algos, out_dir, store_path=None,
          seed_base=None, n_jobs=None) -> list:
    """One aggregate row per (algorithm, sweep point); also returns the rows.

    Experts are trained once at the base config and reused at every point.
    """
    if axis not in SWEEP_AXES:
        raise ContractViolation(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    points = list(points)
    if len(points) < 2:
        raise ContractViolation("a sweep needs at least 2 points")
    expert_tables = None
    if any(a in ("qtdrl", "atdrl") for a in algos):
        expert_tables = load_expert_pair(store_path)

    rows = []
    for value in points:
        point_cfg = cfg.with_updates(**{SWEEP_AXES[axis]: float(value)})
        for algo in algos:
            tables = expert_tables if algo in ("qtdrl", "atdrl") else None
            records = run_experiment(point_cfg, algo, seed_base=seed_base,
                                     expert_tables=tables, n_jobs=n_jobs)
            metrics = [r.metrics() for r in records]
            row = [algo, float(value)]
            for k in SWEEP_METRICS:
                mean, hw = confidence_interval([m[k] for m in metrics])
                row += [mean, hw]
            rows.append(row)

    header = ["algo", axis]
    for k in SWEEP_METRICS:
        header += [f"{k}_mean", f"{k}_hw95"]
    write_csv(Path(out_dir) / f"sweep_{axis}.csv", header, rows)
    return rows
