"""Scenario configuration: dataclass, validation, key=value file I/O."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one experiment scenario.

    Defaults reproduce the reference scenario: 3 base stations at 500 m
    inter-site distance, a 10-UE URLLC slice and a 5-UE eMBB slice per BS,
    3000 TTIs per run with the first 1000 used for exploration, 10 runs.

    Attributes:
        n_bs: number of base stations (independent cells, no coupling).
        isd_m: inter-site distance; UEs are dropped in a disc of radius
            isd_m/2 around their BS.
        n_urllc_ue / n_embb_ue: UEs per slice per BS.
        tti_ms: scheduler time step.
        n_tti: TTIs per run.
        explore_tti: TTIs of the epsilon/transfer decay window.
        n_runs: independent runs per experiment.
        total_rbs: resource blocks available per TTI.
        rb_bandwidth_hz: bandwidth of one RB.
        tx_power_dbm_per_rb: transmit power per RB. The default is set so
            that the eMBB slice needs a substantial RB share at the default
            load, which makes the radio split a real decision.
        noise_dbm_per_hz: thermal noise density.
        interference_margin_db: fixed SINR back-off standing in for
            inter-cell interference, so cells simulate independently.
        urllc_load_mbps / urllc_pkt_bits: URLLC Poisson traffic.
        embb_load_mbps / embb_pkt_bits: eMBB Poisson traffic.
        urllc_cycles_per_pkt / embb_cycles_per_pkt: MEC processing demand.
        mec_capacity_gcps: MEC capacity in gigacycles/s (sweep axis 1..5).
        pkt_timeout_ms: packets older than this are dropped.
        rng_seed: base seed; all randomness derives from it.
        net_kind: learner Q-network cell, "dense" or "lstm".
        atdrl_top_k: per-expert action short-list size for ATDRL.
    """

    n_bs: int = 3
    isd_m: float = 500.0
    n_urllc_ue: int = 10
    n_embb_ue: int = 5
    tti_ms: float = 1.0
    n_tti: int = 3000
    explore_tti: int = 1000
    n_runs: int = 10
    total_rbs: int = 100
    rb_bandwidth_hz: float = 180e3
    tx_power_dbm_per_rb: float = -12.0
    noise_dbm_per_hz: float = -174.0
    interference_margin_db: float = 3.0
    urllc_load_mbps: float = 2.0
    urllc_pkt_bits: int = 256
    embb_load_mbps: float = 20.0
    embb_pkt_bits: int = 4096
    urllc_cycles_per_pkt: float = 80_000.0
    embb_cycles_per_pkt: float = 360_000.0
    mec_capacity_gcps: float = 3.0
    pkt_timeout_ms: float = 50.0
    rng_seed: int = 12345
    net_kind: str = "dense"
    atdrl_top_k: int = 4

    _COUNTS = (
        "n_bs",
        "n_urllc_ue",
        "n_embb_ue",
        "n_tti",
        "explore_tti",
        "n_runs",
        "total_rbs",
    )
    _POSITIVE = (
        "isd_m",
        "tti_ms",
        "rb_bandwidth_hz",
        "urllc_pkt_bits",
        "embb_pkt_bits",
        "urllc_cycles_per_pkt",
        "embb_cycles_per_pkt",
        "mec_capacity_gcps",
        "pkt_timeout_ms",
    )
    # offered loads may be zero (idle-slice scenarios)
    _NONNEGATIVE = ("urllc_load_mbps", "embb_load_mbps")

    def __post_init__(self):
        for name in self._COUNTS:
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(name, f"must be an integer >= 1, got {v!r}")
        for name in self._POSITIVE:
            v = getattr(self, name)
            if not (v > 0):
                raise ConfigError(name, f"must be > 0, got {v!r}")
        for name in self._NONNEGATIVE:
            v = getattr(self, name)
            if not (v >= 0):
                raise ConfigError(name, f"must be >= 0, got {v!r}")
        if self.explore_tti > self.n_tti:
            raise ConfigError("explore_tti", "must not exceed n_tti")
        if self.net_kind not in ("dense", "lstm"):
            raise ConfigError("net_kind", f"must be 'dense' or 'lstm', got {self.net_kind!r}")
        if not isinstance(self.atdrl_top_k, int) or not (1 <= self.atdrl_top_k <= 11):
            raise ConfigError("atdrl_top_k", f"must be an integer in [1, 11], got {self.atdrl_top_k!r}")

    # derived quantities used all over the simulator
    @property
    def tti_s(self) -> float:
        return self.tti_ms * 1e-3

    @property
    def urllc_pkts_per_tti(self) -> float:
        return self.urllc_load_mbps * 1e6 * self.tti_s / self.urllc_pkt_bits

    @property
    def embb_pkts_per_tti(self) -> float:
        return self.embb_load_mbps * 1e6 * self.tti_s / self.embb_pkt_bits

    @property
    def mec_cycles_per_tti(self) -> float:
        return self.mec_capacity_gcps * 1e9 * self.tti_s

    @property
    def timeout_ttis(self) -> float:
        return self.pkt_timeout_ms / self.tti_ms

    def with_updates(self, **kv) -> "ScenarioConfig":
        return replace(self, **kv)

    def to_text(self) -> str:
        lines = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short stable hash of the full configuration."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip().strip("'\"")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r}: {exc}") from None


def load_config(path: str) -> ScenarioConfig:
    """Read a key=value config file. Unknown keys are errors; omitted keys
    keep their defaults. Blank lines and '#' comments are ignored."""
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(key, "unknown configuration key")
            overrides[key] = _parse_value(key, raw)
    return ScenarioConfig(**overrides)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
