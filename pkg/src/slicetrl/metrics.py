"""Evaluation metrics: delay CCDF, Student-t intervals, reward smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ContractViolation

MA_WINDOW = 100  # moving-average window for convergence curves


def ccdf(samples, grid):
    """P(X > tau) for each threshold in grid; nonincreasing by construction."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ContractViolation("ccdf needs at least one sample")
    s = np.sort(samples)
    n = s.size
    return [(float(tau), float((n - np.searchsorted(s, tau, side="right")) / n)) for tau in grid]


def confidence_interval(values, level=0.95):
    """(mean, half-width) of the Student-t interval with n-1 dof."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise ContractViolation(f"confidence interval needs n >= 2 values, got {n}")
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    tq = float(stats.t.ppf(0.5 + level / 2.0, n - 1))
    return mean, tq * sd / np.sqrt(n)


def moving_average(x, window=MA_WINDOW):
    """Same-length trailing moving average; early entries average what is
    available so curves start at t=1."""
    x = np.asarray(x, dtype=float)
    csum = np.cumsum(x)
    out = np.empty_like(csum)
    w = min(window, x.size)
    out[:w] = csum[:w] / np.arange(1, w + 1)
    if x.size > w:
        out[w:] = (csum[w:] - csum[:-w]) / w
    return out


def time_to_fraction_of_final(rewards, frac=0.9, window=MA_WINDOW) -> int:
    """First TTI (1-based) whose moving-average reward reaches frac of the
    final moving-average value. Falls back to the full length when the
    final value is not positive."""
    ma = moving_average(rewards, window)
    final = ma[-1]
    if final <= 0.0:
        return int(len(ma))
    hit = np.flatnonzero(ma >= frac * final)
    return int(hit[0]) + 1 if hit.size else int(len(ma))


@dataclass
class AggregateStats:
    """Per-metric mean and 95% half-width across runs."""

    mean: dict
    halfwidth: dict
    n: int

    @classmethod
    def from_rows(cls, rows: list, keys, level=0.95) -> "AggregateStats":
        mean, hw = {}, {}
        for k in keys:
            vals = [row[k] for row in rows]
            mean[k], hw[k] = confidence_interval(vals, level)
        return cls(mean=mean, halfwidth=hw, n=len(rows))
