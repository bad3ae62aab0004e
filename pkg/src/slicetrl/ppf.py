"""Priority proportional-fair baseline: model-based, no learning.

RBs go one at a time to the UE maximizing priority * rate / average
throughput, with URLLC UEs that have queued packets boosted by a fixed
priority factor. The CPU is split proportionally to the per-slice compute
backlog.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .env import EMBB, URLLC, SliceEnv

PF_FLOOR_BPS = 1.0


@dataclass
class PfState:
    """Smoothed per-UE throughput plus the URLLC priority weight."""

    avg_thr: np.ndarray
    urllc_priority: float = 8.0
    smoothing: float = 0.01

    @classmethod
    def fresh(cls, n_ue: int, **kw) -> "PfState":
        return cls(avg_thr=np.full(n_ue, PF_FLOOR_BPS), **kw)

    def commit(self, decision: "PpfDecision", tti_s: float) -> None:
        """Fold the allocation's scheduled bits into the averages."""
        thr = decision.scheduled_bits / tti_s
        self.avg_thr = np.maximum((1.0 - self.smoothing) * self.avg_thr + self.smoothing * thr, PF_FLOOR_BPS)


@dataclass
class PpfDecision:
    per_ue_rbs: dict
    cpu_frac: float
    scheduled_bits: np.ndarray = field(repr=False)


def pf_assign(rates, avgs, prios, demand_bits, total_rbs, tti_s, smoothing=0.01):
    """Greedy one-RB-at-a-time PF assignment.

    Only UEs with demand compete; within the TTI each assigned RB bumps the
    winner's working average so service spreads instead of piling onto a
    single UE. Once every demand is covered, leftover RBs still go to the
    best metric so the full grid is always used. Ties break to the lowest
    UE index (argmax on equal metrics).
    """
    n = len(rates)
    eligible = [u for u in range(n) if demand_bits[u] > 0.0]
    assignment: dict = {}
    scheduled = np.zeros(n)
    if not eligible or total_rbs <= 0:
        return assignment, scheduled

    work_avg = np.maximum(np.asarray(avgs, dtype=float).copy(), PF_FLOOR_BPS)
    demand = np.asarray(demand_bits, dtype=float).copy()
    rb_bits = np.asarray(rates, dtype=float) * tti_s

    for _ in range(total_rbs):
        pool = [u for u in eligible if demand[u] > 0.0] or eligible
        metrics = [prios[u] * rates[u] / work_avg[u] for u in pool]
        u = pool[int(np.argmax(metrics))]
        assignment[u] = assignment.get(u, 0) + 1
        tx = min(rb_bits[u], demand[u])
        scheduled[u] += tx
        demand[u] -= tx
        work_avg[u] += smoothing * rates[u]
    return assignment, scheduled


def ppf_allocate(env: SliceEnv, pf: PfState) -> PpfDecision:
    """Pure decision for the current TTI; apply with env.step_alloc and
    PfState.commit."""
    st, cfg = env.state, env.cfg
    rates = env.per_rb_rates()
    demand = np.zeros(env.n_ue)
    for s in (URLLC, EMBB):
        for p in st.radio_q[s]:
            demand[p.ue_id] += p.bits_left
    prios = np.ones(env.n_ue)
    for u in env.slice_ues[URLLC]:
        if demand[u] > 0.0:
            prios[u] = pf.urllc_priority

    assignment, scheduled = pf_assign(
        rates, pf.avg_thr, prios, demand, cfg.total_rbs, cfg.tti_s, pf.smoothing
    )

    b_u = st.compute_backlog_cycles(URLLC)
    b_e = st.compute_backlog_cycles(EMBB)
    cpu_frac = 0.5 if (b_u + b_e) <= 0.0 else b_u / (b_u + b_e)
    return PpfDecision(per_ue_rbs=assignment, cpu_frac=cpu_frac, scheduled_bits=scheduled)
