"""Statistical inference suite: seeded bootstrap confidence intervals,
paired bootstrap significance tests with multiplicity corrections, and
Cliff's delta effect sizes.

Everything here is deterministic given a seed.  Resample b always draws
from a generator derived from (base seed, b), so results are identical
whether resamples run sequentially or fan out across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .detectors import cell_seed

DEFAULT_RESAMPLES = 1000
DEFAULT_LEVEL = 0.95

MARK_SUPPORTED = "✓"
MARK_CONTESTABLE = "○"
MARK_NOT_SUPPORTED = "×"


@dataclass(frozen=True)
class BootstrapConfig:
    n_resamples: int = DEFAULT_RESAMPLES
    level: float = DEFAULT_LEVEL
    seed: int = 0

    def __post_init__(self):
        if self.n_resamples < 1:
            raise ValueError("n_resamples must be positive")
        if not (0.0 < self.level < 1.0):
            raise ValueError("confidence level must lie in (0, 1)")

    @property
    def min_p(self) -> float:
        """Smallest p-value resolvable at this resample count."""
        return 1.0 / (self.n_resamples + 1)


@dataclass(frozen=True)
class BootstrapInterval:
    lo: float
    hi: float
    point: float


def _resample_rng(cfg: BootstrapConfig, index: int) -> np.random.Generator:
    return np.random.default_rng(cell_seed(cfg.seed, "resample", index))


def _statistic_fn(statistic) -> Callable[[np.ndarray], float]:
    # "tpr-at-fpr" operates on per-item detection indicators produced at a
    # threshold calibrated once on the full null sample; resampling the
    # indicators is then a resample of the TPR itself.
    if statistic in ("mean", "tpr-at-fpr"):
        return lambda v: float(np.mean(v))
    if callable(statistic):
        return statistic
    raise ValueError(f"unknown statistic {statistic!r}")


def bootstrap_ci(values, statistic="mean",
                 cfg: BootstrapConfig = BootstrapConfig()) -> BootstrapInterval:
    """Percentile bootstrap interval, seeded and worker-order independent."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot bootstrap an empty sample")
    fn = _statistic_fn(statistic)
    point = fn(arr)
    stats = np.empty(cfg.n_resamples)
    for b in range(cfg.n_resamples):
        idx = _resample_rng(cfg, b).integers(0, arr.size, arr.size)
        stats[b] = fn(arr[idx])
    alpha = 1.0 - cfg.level
    lo, hi = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return BootstrapInterval(lo=float(lo), hi=float(hi), point=float(point))


def paired_bootstrap_test(a, b, cfg: BootstrapConfig = BootstrapConfig()) -> float:
    """Two-sided p-value for the paired difference in means (TPR when the
    inputs are detection indicators).

    Items are resampled jointly so the pairing survives; the p-value is
    twice the smaller tail mass of the resampled difference around zero,
    floored at the bootstrap resolution 1/(B+1).
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape or av.ndim != 1:
        raise ValueError("paired samples must be 1-d and equal length")
    if av.size == 0:
        raise ValueError("cannot test empty samples")
    diffs = np.empty(cfg.n_resamples)
    for r in range(cfg.n_resamples):
        idx = _resample_rng(cfg, r).integers(0, av.size, av.size)
        diffs[r] = float(np.mean(av[idx]) - np.mean(bv[idx]))
    lo_tail = float(np.count_nonzero(diffs <= 0.0) / cfg.n_resamples)
    hi_tail = float(np.count_nonzero(diffs >= 0.0) / cfg.n_resamples)
    p = 2.0 * max(min(lo_tail, hi_tail), cfg.min_p)
    return min(1.0, p)


def bonferroni(p: float, k: int) -> float:
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    if k < 1:
        raise ValueError("k must be at least 1")
    return min(1.0, k * p)


def holm(ps: Sequence[float]) -> list[float]:
    """Holm step-down adjustment, monotone and clamped to 1."""
    for p in ps:
        if not (0.0 <= p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
    k = len(ps)
    order = sorted(range(k), key=lambda i: ps[i])
    adjusted = [0.0] * k
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, (k - rank) * ps[i])
        adjusted[i] = min(1.0, running)
    return adjusted


@dataclass(frozen=True)
class CliffsDelta:
    delta: float
    lo: float
    hi: float


def _delta_point(x: np.ndarray, y_sorted: np.ndarray) -> float:
    gt = np.searchsorted(y_sorted, x, side="left").sum()
    lt = (y_sorted.size - np.searchsorted(y_sorted, x, side="right")).sum()
    return float((int(gt) - int(lt)) / (x.size * y_sorted.size))


def cliffs_delta(x, y, cfg: BootstrapConfig | None = None) -> CliffsDelta:
    """delta = (#{x>y} - #{x<y}) / (|x| |y|), ties contributing zero.

    The CI resamples both groups independently through the shared seeded
    bootstrap machinery.  Pass cfg=None to skip the CI (bounds = point).
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.size == 0 or yv.size == 0:
        raise ValueError("both samples must be non-empty")
    point = _delta_point(xv, np.sort(yv))
    if cfg is None:
        return CliffsDelta(delta=point, lo=point, hi=point)
    stats = np.empty(cfg.n_resamples)
    for b in range(cfg.n_resamples):
        rng = _resample_rng(cfg, b)
        xs = xv[rng.integers(0, xv.size, xv.size)]
        ys = yv[rng.integers(0, yv.size, yv.size)]
        stats[b] = _delta_point(xs, np.sort(ys))
    alpha = 1.0 - cfg.level
    lo, hi = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return CliffsDelta(delta=point, lo=float(lo), hi=float(hi))


@dataclass(frozen=True)
class SufficiencyRule:
    """Mark rule for whether a detection level supports a regime threshold.

    supported when the CI lower bound clears the requirement, contestable
    when only the point estimate does, not-supported otherwise.  Monotone:
    raising the estimate or the lower bound never demotes the mark.
    """

    requirement: float

    def mark(self, point: float, lo: float) -> str:
        if lo >= self.requirement:
            return MARK_SUPPORTED
        if point >= self.requirement:
            return MARK_CONTESTABLE
        return MARK_NOT_SUPPORTED


def sufficiency_table(estimates: dict, rules: dict[str, SufficiencyRule],
                      tiers: Sequence[int]) -> dict[str, dict[int, str]]:
    """Apply per-regime rules over a (regime, tier) estimate grid.

    estimates maps (regime_id, tier) -> (point, lo).  Missing cells raise
    rather than silently imputing a mark.
    """
    missing = [(rid, t) for rid in rules for t in tiers
               if (rid, t) not in estimates]
    if missing:
        raise ValueError(f"missing sufficiency cells: {missing}")
    table: dict[str, dict[int, str]] = {}
    for rid, rule in rules.items():
        row = {}
        for t in tiers:
            point, lo = estimates[(rid, t)]
            row[t] = rule.mark(point, lo)
        table[rid] = row
    return table
