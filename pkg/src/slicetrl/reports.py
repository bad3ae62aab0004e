"""Figure generation from the CSVs an experiment run leaves behind."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import SliceTrlError
from .runner import ALGORITHMS

ALGO_COLORS = {"qtdrl": "tab:blue", "atdrl": "tab:green", "dqn": "tab:orange", "ppf": "tab:red"}
CI_MARKS = 12  # whisker count along sweep/convergence curves


def _read_csv(path: Path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _require(out: Path, names) -> dict:
    found, missing = {}, []
    for name in names:
        p = out / name
        if p.exists():
            found[name] = p
        else:
            missing.append(name)
    if missing:
        raise SliceTrlError(
            f"missing CSVs in {out}: expected {', '.join(missing)} "
            "(run 'slicetrl run' / 'slicetrl sweep' first)"
        )
    return found


def _present_algos(out: Path, pattern: str) -> list:
    return [a for a in ALGORITHMS if (out / pattern.format(algo=a)).exists()]


def plot_ccdf(out: Path) -> Path:
    algos = _present_algos(out, "ccdf_{algo}.csv")
    if not algos:
        _require(out, [f"ccdf_{a}.csv" for a in ALGORITHMS])
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for algo in algos:
        rows = _read_csv(out / f"ccdf_{algo}.csv")
        xs = [float(r["threshold_ms"]) for r in rows]
        ys = [float(r["ccdf"]) for r in rows]
        ax.plot(xs, ys, label=algo, color=ALGO_COLORS[algo])
    ax.set_yscale("log")
    ax.set_xlabel("URLLC delay threshold (ms)")
    ax.set_ylabel("P(delay > threshold)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    path = out / "fig_ccdf.svg"
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_convergence(out: Path) -> Path:
    algos = _present_algos(out, "convergence_{algo}.csv")
    if not algos:
        _require(out, [f"convergence_{a}.csv" for a in ALGORITHMS])
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for algo in algos:
        rows = _read_csv(out / f"convergence_{algo}.csv")
        ts = [int(r["tti"]) for r in rows]
        mean = [float(r["reward_ma_mean"]) for r in rows]
        hw = [float(r["reward_ma_hw95"]) for r in rows]
        ax.plot(ts, mean, label=algo, color=ALGO_COLORS[algo])
        step = max(len(ts) // CI_MARKS, 1)
        ax.errorbar(
            ts[::step], mean[::step], yerr=hw[::step],
            fmt="none", ecolor=ALGO_COLORS[algo], alpha=0.6, capsize=2,
        )
    ax.set_xlim(1, max(int(r["tti"]) for r in rows))
    ax.set_xlabel("TTI")
    ax.set_ylabel("moving-average reward (window 100)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path = out / "fig_convergence.svg"
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def _plot_sweep(out: Path, axis: str, xlabel: str) -> Path:
    name = f"sweep_{axis}.csv"
    _require(out, [name])
    rows = _read_csv(out / name)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    for algo in ALGORITHMS:
        sub = [r for r in rows if r["algo"] == algo]
        if not sub:
            continue
        xs = [float(r[axis]) for r in sub]
        for ax, key in ((ax1, "urllc_delay_ms_mean"), (ax2, "embb_throughput_mbps_mean")):
            ys = [float(r[f"{key}_mean"]) for r in sub]
            hw = [float(r[f"{key}_hw95"]) for r in sub]
            ax.errorbar(xs, ys, yerr=hw, label=algo, color=ALGO_COLORS[algo],
                        marker="o", capsize=3)
    ax1.set_ylabel("mean URLLC delay (ms)")
    ax2.set_ylabel("eMBB throughput per cell (Mbps)")
    for ax in (ax1, ax2):
        ax.set_xlabel(xlabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
    path = out / f"fig_sweep_{axis}.svg"
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def make_report(out_dir) -> list:
    """Emit the four evaluation figures; raises when inputs are missing."""
    out = Path(out_dir)
    made = [plot_ccdf(out), plot_convergence(out)]
    made.append(_plot_sweep(out, "urllc_load", "URLLC offered load (Mbps)"))
    made.append(_plot_sweep(out, "mec_capacity", "MEC capacity (Gcycles/s)"))
    return made
