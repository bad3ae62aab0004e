"""Per-TTI simulator of one MEC-enabled base station with two slices.

One URLLC slice (delay-driven) and one eMBB slice (throughput-driven) share
`total_rbs` radio resource blocks and the MEC CPU. Every TTI an external
policy splits both resources between the slices; packets flow

    Poisson arrival -> radio queue -> transmission -> compute backlog
    -> processing -> departure

and a packet's delay is the TTI span from arrival to compute departure.
The radio link uses 128.1 + 37.6*log10(d_km) path loss, unit-mean
exponential (Rayleigh-power) fading redrawn per UE per TTI, thermal noise
plus a fixed interference margin, and Shannon capacity per RB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actions import JointAction
from .config import ScenarioConfig
from .errors import ContractViolation

URLLC, EMBB = 0, 1
SLICE_NAMES = ("urllc", "embb")

# queue-fill saturation used by observe()
RADIO_FULL_PKTS = 64.0
CPU_FULL_ARRIVAL_TTIS = 5.0
REWARD_WINDOW_TTIS = 10
N_BUCKETS = 4
MIN_UE_DIST_M = 10.0


class Packet:
    __slots__ = ("arrival_tti", "size_bits", "cycles", "slice", "ue_id", "bits_left", "cycles_left")

    def __init__(self, arrival_tti, size_bits, cycles, slice_id, ue_id):
        self.arrival_tti = arrival_tti
        self.size_bits = size_bits
        self.cycles = cycles
        self.slice = slice_id
        self.ue_id = ue_id  # global UE index
        self.bits_left = float(size_bits)
        self.cycles_left = float(cycles)


@dataclass
class TtiOutcome:
    """Per-TTI results. Reward is clamped into [-1, 1] by construction."""

    urllc_delay_samples: list            # ms, compute departures this TTI
    embb_bits_served: float              # bits over the air for eMBB
    urllc_drops: int
    reward: float
    embb_bits_processed: float = 0.0     # bits leaving the MEC for eMBB


@dataclass
class LearnerState:
    """Agent view of the simulator: normalized fills and their buckets.

    vec = (urllc radio fill, embb radio fill, urllc compute fill,
    embb compute fill), each clamped to [0, 1]; buckets quantize each
    component into N_BUCKETS equal bins.
    """

    vec: np.ndarray
    buckets: tuple

    RADIO_URLLC = 0
    RADIO_EMBB = 1
    CPU_URLLC = 2
    CPU_EMBB = 3


@dataclass
class NetState:
    tti: int
    pos_xy: np.ndarray            # (n_ue, 2) metres relative to the BS
    dist_m: np.ndarray            # (n_ue,)
    pathloss_lin: np.ndarray      # (n_ue,) linear power gain, fading excluded
    gain: np.ndarray              # (n_ue,) pathloss * current fading
    avg_thr: np.ndarray           # (n_ue,) smoothed served throughput, bit/s
    radio_q: list = field(default_factory=lambda: [[], []])
    compute_q: list = field(default_factory=lambda: [[], []])
    rr_offset: list = field(default_factory=lambda: [0, 0])
    arrived: list = field(default_factory=lambda: [0, 0])
    departed: list = field(default_factory=lambda: [0, 0])
    dropped: list = field(default_factory=lambda: [0, 0])

    def compute_backlog_cycles(self, slice_id: int) -> float:
        return sum(p.cycles_left for p in self.compute_q[slice_id])


def _dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def pathloss_db(d_m: float) -> float:
    d_km = max(d_m, MIN_UE_DIST_M) / 1000.0
    return 128.1 + 37.6 * math.log10(d_km)


class SliceEnv:
    """One base station. Mutated by exactly one run at a time."""

    def __init__(self, cfg: ScenarioConfig, seed):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.n_urllc = cfg.n_urllc_ue
        self.n_embb = cfg.n_embb_ue
        self.n_ue = self.n_urllc + self.n_embb
        # slice -> global UE index ranges
        self.slice_ues = (
            list(range(self.n_urllc)),
            list(range(self.n_urllc, self.n_ue)),
        )
        self._tx_w = _dbm_to_w(cfg.tx_power_dbm_per_rb)
        self._noise_w_rb = _dbm_to_w(cfg.noise_dbm_per_hz) * cfg.rb_bandwidth_hz
        self._margin_lin = 10.0 ** (cfg.interference_margin_db / 10.0)
        self._lam = (cfg.urllc_pkts_per_tti, cfg.embb_pkts_per_tti)
        self._pkt_bits = (cfg.urllc_pkt_bits, cfg.embb_pkt_bits)
        self._pkt_cycles = (cfg.urllc_cycles_per_pkt, cfg.embb_cycles_per_pkt)
        # compute-fill saturation: a few TTIs of mean arrivals, so the
        # buckets resolve the backlog range where control still helps
        self._cpu_full_cycles = (
            max(CPU_FULL_ARRIVAL_TTIS * self._lam[URLLC] * self._pkt_cycles[URLLC], 1.0),
            max(CPU_FULL_ARRIVAL_TTIS * self._lam[EMBB] * self._pkt_cycles[EMBB], 1.0),
        )
        self._embb_offered_bits = max(cfg.embb_load_mbps * 1e6 * cfg.tti_s, 1.0)
        self._embb_window = []
        self.state = self._init_state()

    def _init_state(self) -> NetState:
        r = (self.cfg.isd_m / 2.0) * np.sqrt(self.rng.random(self.n_ue))
        theta = 2.0 * np.pi * self.rng.random(self.n_ue)
        pos = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        dist = np.maximum(r, MIN_UE_DIST_M)
        pl_db = 128.1 + 37.6 * np.log10(dist / 1000.0)
        pl_lin = 10.0 ** (-pl_db / 10.0)
        fading = self.rng.exponential(1.0, self.n_ue)
        return NetState(
            tti=0,
            pos_xy=pos,
            dist_m=dist,
            pathloss_lin=pl_lin,
            gain=pl_lin * fading,
            avg_thr=np.ones(self.n_ue),
        )

    def reset(self, seed=None) -> NetState:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self._embb_window = []
        self.state = self._init_state()
        return self.state

    # ---------- radio helpers ----------

    def per_rb_rates(self, gain=None) -> np.ndarray:
        """Achievable bit/s on one RB per UE for the given channel gains."""
        g = self.state.gain if gain is None else gain
        snr = self._tx_w * g / (self._noise_w_rb * self._margin_lin)
        return self.cfg.rb_bandwidth_hz * np.log2(1.0 + snr)

    def backlogged_ues(self, slice_id: int) -> list:
        present = {p.ue_id for p in self.state.radio_q[slice_id]}
        return sorted(present)

    def _round_robin_rbs(self, n_rbs: int, slice_id: int) -> dict:
        """Spread a slice's RBs over its backlogged UEs, rotating the
        starting UE each TTI so leftovers even out."""
        ues = self.backlogged_ues(slice_id)
        if not ues or n_rbs <= 0:
            return {}
        k = len(ues)
        start = self.state.rr_offset[slice_id] % k
        order = ues[start:] + ues[:start]
        base, extra = divmod(n_rbs, k)
        counts = {}
        for i, u in enumerate(order):
            c = base + (1 if i < extra else 0)
            if c:
                counts[u] = c
        return counts

    # ---------- stepping ----------

    def step(self, action: JointAction) -> TtiOutcome:
        if not isinstance(action, JointAction):
            raise ContractViolation(f"expected JointAction, got {type(action).__name__}")
        self._arrive()
        self._redraw_fading()
        n_u = int(round(action.radio_frac * self.cfg.total_rbs))
        per_ue_rbs = self._round_robin_rbs(n_u, URLLC)
        per_ue_rbs.update(self._round_robin_rbs(self.cfg.total_rbs - n_u, EMBB))
        self.state.rr_offset[URLLC] += 1
        self.state.rr_offset[EMBB] += 1
        return self._serve(per_ue_rbs, action.cpu_frac)

    def step_alloc(self, per_ue_rbs: dict, cpu_frac: float) -> TtiOutcome:
        """Step with an explicit per-UE RB assignment (scheduler path)."""
        if not (0.0 <= cpu_frac <= 1.0):
            raise ContractViolation(f"cpu_frac {cpu_frac} outside [0, 1]")
        if sum(per_ue_rbs.values()) > self.cfg.total_rbs:
            raise ContractViolation("RB assignment exceeds total_rbs")
        self._arrive()
        self._redraw_fading()
        return self._serve(dict(per_ue_rbs), cpu_frac)

    def _arrive(self):
        st = self.state
        for s in (URLLC, EMBB):
            n = int(self.rng.poisson(self._lam[s]))
            if n:
                local = self.rng.integers(0, len(self.slice_ues[s]), size=n)
                base = self.slice_ues[s][0]
                bits, cyc = self._pkt_bits[s], self._pkt_cycles[s]
                q = st.radio_q[s]
                for lu in local:
                    q.append(Packet(st.tti, bits, cyc, s, base + int(lu)))
                st.arrived[s] += n

    def _redraw_fading(self):
        fading = self.rng.exponential(1.0, self.n_ue)
        self.state.gain = self.state.pathloss_lin * fading

    def _serve(self, per_ue_rbs: dict, cpu_frac: float) -> TtiOutcome:
        st, cfg = self.state, self.cfg
        rates = self.per_rb_rates()
        budget_bits = {u: n * rates[u] * cfg.tti_s for u, n in per_ue_rbs.items()}
        served_bits_ue = np.zeros(self.n_ue)
        air_bits = [0.0, 0.0]

        for s in (URLLC, EMBB):
            remaining = []
            for p in st.radio_q[s]:
                b = budget_bits.get(p.ue_id, 0.0)
                if b > 0.0 and p.bits_left > 0.0:
                    tx = min(b, p.bits_left)
                    p.bits_left -= tx
                    budget_bits[p.ue_id] = b - tx
                    served_bits_ue[p.ue_id] += tx
                    air_bits[s] += tx
                if p.bits_left <= 1e-9:
                    st.compute_q[s].append(p)
                else:
                    remaining.append(p)
            st.radio_q[s] = remaining

        # MEC drain, work-conserving FIFO per slice
        delays_ms = []
        processed_bits = [0.0, 0.0]
        cpu_budget = [cpu_frac * cfg.mec_cycles_per_tti, (1.0 - cpu_frac) * cfg.mec_cycles_per_tti]
        for s in (URLLC, EMBB):
            budget = cpu_budget[s]
            remaining = []
            for p in st.compute_q[s]:
                if budget > 0.0:
                    work = min(budget, p.cycles_left)
                    p.cycles_left -= work
                    budget -= work
                if p.cycles_left <= 1e-6:
                    st.departed[s] += 1
                    processed_bits[s] += p.size_bits
                    if s == URLLC:
                        delays_ms.append((st.tti - p.arrival_tti) * cfg.tti_ms)
                else:
                    remaining.append(p)
            st.compute_q[s] = remaining

        # expiry after service; a packet may depart at exactly the timeout
        drops = [0, 0]
        limit = cfg.timeout_ttis
        for s in (URLLC, EMBB):
            for qname in ("radio_q", "compute_q"):
                q = getattr(st, qname)[s]
                kept = [p for p in q if (st.tti - p.arrival_tti) <= limit]
                drops[s] += len(q) - len(kept)
                getattr(st, qname)[s] = kept
            st.dropped[s] += drops[s]

        reward = self._reward(delays_ms, drops[URLLC], processed_bits[EMBB])
        st.avg_thr = 0.99 * st.avg_thr + 0.01 * (served_bits_ue / cfg.tti_s)
        st.tti += 1
        self._check_conservation()
        return TtiOutcome(
            urllc_delay_samples=delays_ms,
            embb_bits_served=air_bits[EMBB],
            urllc_drops=drops[URLLC],
            reward=reward,
            embb_bits_processed=processed_bits[EMBB],
        )

    def _hol_age_ms(self, slice_id: int) -> float:
        """Age of the oldest packet of one slice still in the system."""
        st = self.state
        oldest = None
        for q in (st.radio_q[slice_id], st.compute_q[slice_id]):
            for p in q:
                if oldest is None or p.arrival_tti < oldest:
                    oldest = p.arrival_tti
        return 0.0 if oldest is None else (st.tti - oldest) * self.cfg.tti_ms

    def _reward(self, delays_ms, urllc_drops, embb_bits_processed) -> float:
        """eMBB served fraction minus URLLC delay term, each in [0, 1].

        The served fraction is averaged over a short trailing window to
        tame per-TTI Poisson noise. The delay term mixes this TTI's
        departures (timed-out packets enter at the timeout value) with the
        head-of-line age, so starving the slice is penalized immediately
        instead of only once drops begin.
        """
        self._embb_window.append(embb_bits_processed)
        if len(self._embb_window) > REWARD_WINDOW_TTIS:
            self._embb_window.pop(0)
        offered = self._embb_offered_bits * len(self._embb_window)
        embb_term = min(sum(self._embb_window) / offered, 1.0)
        n = len(delays_ms) + urllc_drops
        mean_ms = 0.0
        if n:
            mean_ms = (sum(delays_ms) + urllc_drops * self.cfg.pkt_timeout_ms) / n
        delay_term = min(max(mean_ms, self._hol_age_ms(URLLC)) / 10.0, 1.0)
        return embb_term - delay_term

    def _check_conservation(self):
        st = self.state
        for s in (URLLC, EMBB):
            in_flight = len(st.radio_q[s]) + len(st.compute_q[s])
            if st.arrived[s] != in_flight + st.departed[s] + st.dropped[s]:
                raise AssertionError(
                    f"packet conservation broken for slice {SLICE_NAMES[s]}: "
                    f"{st.arrived[s]} arrived vs {in_flight} queued + "
                    f"{st.departed[s]} departed + {st.dropped[s]} dropped"
                )

    # ---------- observation ----------

    def observe(self) -> LearnerState:
        st = self.state
        vec = np.array(
            [
                min(len(st.radio_q[URLLC]) / RADIO_FULL_PKTS, 1.0),
                min(len(st.radio_q[EMBB]) / RADIO_FULL_PKTS, 1.0),
                min(st.compute_backlog_cycles(URLLC) / self._cpu_full_cycles[URLLC], 1.0),
                min(st.compute_backlog_cycles(EMBB) / self._cpu_full_cycles[EMBB], 1.0),
            ]
        )
        buckets = tuple(min(int(v * N_BUCKETS), N_BUCKETS - 1) for v in vec)
        return LearnerState(vec=vec, buckets=buckets)
