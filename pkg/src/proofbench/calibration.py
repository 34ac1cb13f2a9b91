"""Weight calibration: item-level dataset partitioning, exhaustive unit
simplex enumeration, and expected-regret minimization per regime.

The grid search is deliberately exhaustive (231 candidates at resolution
0.05); no early stopping, so the argmin is reproducible and order
independent.  Ties break to the lexicographically first candidate in
enumeration order, which starts at (0, 0, 1).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    BRANCH_DOMESTIC,
    BRANCH_OPLAW,
    BRANCH_PRODUCT,
    COMPONENT_ATTESTATION,
    COMPONENT_PROVENANCE,
    COMPONENT_WATERMARK,
    COST_AUTHENTIC,
    COST_SYNTHETIC,
    DECISION_ACCEPT,
    DECISION_DEFER,
    DECISION_REJECT,
    CostMatrix,
    RegimeProfile,
    ScoreRecord,
    TRUTH_MARKED,
    regime_defaults,
)
from .fusion import LIKELIHOOD_RATIO_MAX

DEFAULT_RESOLUTION = 0.05
DEFAULT_PARTITION_RATIO = 0.8
# Calibration presentation seed; the exhaustive search is order-invariant
# but the partition shuffle must be pinned for bit reproducibility.
DEFAULT_PARTITION_SEED = 20260301

PARTITION_CALIBRATION = "calibration"
PARTITION_TEST = "test"


def partition(records: Sequence[ScoreRecord], ratio: float = DEFAULT_PARTITION_RATIO,
              seed: int = DEFAULT_PARTITION_SEED) -> tuple[list[ScoreRecord], list[ScoreRecord]]:
    """Split records item-wise into (calibration, test) and tag them.

    All records sharing an item id (laundered variants of one source) land
    on the same side.  Sizes follow the ratio to within one item, with both
    sides kept non-empty.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"partition ratio must lie in (0, 1), got {ratio!r}")
    if not records:
        raise ValueError("cannot partition an empty record set")
    items = sorted({r.item_id for r in records})
    if len(items) < 2:
        raise ValueError("need at least 2 distinct items to partition")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(items))
    n_cal = int(round(ratio * len(items)))
    n_cal = min(max(n_cal, 1), len(items) - 1)
    cal_items = {items[i] for i in order[:n_cal]}
    cal, test = [], []
    for rec in records:
        if rec.item_id in cal_items:
            cal.append(dataclasses.replace(rec, partition=PARTITION_CALIBRATION))
        else:
            test.append(dataclasses.replace(rec, partition=PARTITION_TEST))
    return cal, test


def enumerate_simplex(resolution: float) -> list[tuple[float, float, float]]:
    """All 3-weight vectors on the unit simplex at the given resolution,
    lexicographically ascending: (0,0,1) first, (1,0,0) last."""
    k = round(1.0 / resolution)
    if k < 1 or abs(k * resolution - 1.0) > 1e-9:
        raise ValueError(f"1/resolution must be an integer, got {resolution!r}")
    grid = []
    for i in range(k + 1):
        w1 = min(i * resolution, 1.0)
        for j in range(k + 1 - i):
            w2 = min(j * resolution, 1.0 - w1)
            # Close the simplex exactly; clamp at 0 because w1 + w2 can
            # round a hair above 1 and profile validation rejects any
            # negative weight, however tiny.
            grid.append((w1, w2, max(0.0, 1.0 - w1 - w2)))
    return grid


def simplex_cardinality(resolution: float) -> int:
    k = round(1.0 / resolution)
    return (k + 1) * (k + 2) // 2


class _RecordArrays:
    """Column view of a record set for the vectorized regret scan."""

    def __init__(self, records: Sequence[ScoreRecord]):
        if not records:
            raise ValueError("empty record set")
        n = len(records)
        self.s_prov = np.empty(n)
        self.s_mark = np.empty(n)
        self.s_att = np.empty(n)
        self.synthetic = np.empty(n, dtype=bool)
        for i, rec in enumerate(records):
            self.s_prov[i] = rec.unit_scores.get(COMPONENT_PROVENANCE, 0.0)
            self.s_mark[i] = rec.unit_scores.get(COMPONENT_WATERMARK, 0.0)
            self.s_att[i] = rec.unit_scores.get(COMPONENT_ATTESTATION, 0.0)
            self.synthetic[i] = rec.truth == TRUTH_MARKED

    def combined(self, weights: Sequence[float]) -> np.ndarray:
        w1, w2, w3 = weights
        return 1.0 - (1.0 - w1 * self.s_prov) * (1.0 - w2 * self.s_mark) \
            * (1.0 - w3 * self.s_att)


def _accept_mask(arrays: _RecordArrays, profile: RegimeProfile,
                 weights: Sequence[float]) -> np.ndarray:
    """Vectorized mirror of the per-record decision procedure: same
    statistic arithmetic, so boundary cases agree exactly."""
    combined = arrays.combined(weights)
    if profile.branch == BRANCH_OPLAW:
        ratio = np.minimum(combined / np.maximum(1.0 - combined, 1e-300),
                           LIKELIHOOD_RATIO_MAX)
        posterior = ratio * profile.prior / (
            ratio * profile.prior + 1.0 - profile.prior)
        return posterior >= profile.tau
    if profile.branch == BRANCH_DOMESTIC:
        ratio = np.minimum(combined / np.maximum(1.0 - combined, 1e-300),
                           LIKELIHOOD_RATIO_MAX)
        return ratio >= profile.lambda_min
    return combined >= profile.tau


def _regret(arrays: _RecordArrays, profile: RegimeProfile,
            weights: Sequence[float], cost: CostMatrix) -> float:
    accept = _accept_mask(arrays, profile, weights)
    fallback = DECISION_DEFER if profile.branch == BRANCH_OPLAW \
        else DECISION_REJECT
    costs = {
        (DECISION_ACCEPT, True): cost.cost(DECISION_ACCEPT, COST_SYNTHETIC),
        (DECISION_ACCEPT, False): cost.cost(DECISION_ACCEPT, COST_AUTHENTIC),
        (fallback, True): cost.cost(fallback, COST_SYNTHETIC),
        (fallback, False): cost.cost(fallback, COST_AUTHENTIC),
    }
    synth = arrays.synthetic
    incurred = np.where(
        accept,
        np.where(synth, costs[(DECISION_ACCEPT, True)],
                 costs[(DECISION_ACCEPT, False)]),
        np.where(synth, costs[(fallback, True)], costs[(fallback, False)]),
    )
    # Regret baseline: cheapest decision the branch could have made per
    # record, so a perfect decision rule scores exactly 0.
    best = np.where(
        synth,
        min(costs[(DECISION_ACCEPT, True)], costs[(fallback, True)]),
        min(costs[(DECISION_ACCEPT, False)], costs[(fallback, False)]),
    )
    return float(np.mean(incurred - best))


def expected_regret(weights: Sequence[float], records: Sequence[ScoreRecord],
                    profile: RegimeProfile, cost: CostMatrix) -> float:
    """Mean decision cost above the per-record minimum achievable cost."""
    return _regret(_RecordArrays(records), profile, weights, cost)


@dataclass(frozen=True)
class CalibrationResult:
    regime_id: str
    weights: tuple[float, float, float]
    regret: float
    resolution: float
    candidate_count: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "regime_id": self.regime_id,
            "weights": list(self.weights),
            "regret": self.regret,
            "resolution": self.resolution,
            "candidate_count": self.candidate_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CalibrationResult":
        return cls(regime_id=d["regime_id"],
                   weights=tuple(float(w) for w in d["weights"]),
                   regret=float(d["regret"]),
                   resolution=float(d["resolution"]),
                   candidate_count=int(d["candidate_count"]),
                   seed=int(d.get("seed", 0)))


def _guard_calibration_only(records: Sequence[ScoreRecord]) -> None:
    leaked = [r.item_id for r in records if r.partition == PARTITION_TEST]
    if leaked:
        raise ValueError(
            f"data-leak guard: {len(leaked)} test-partition records passed "
            f"to weight calibration (first: {leaked[0]!r})")


def calibrate_weights(records: Sequence[ScoreRecord], regime_id: str,
                      cost: CostMatrix | None = None,
                      resolution: float = DEFAULT_RESOLUTION,
                      profile: RegimeProfile | None = None,
                      seed: int = 0) -> CalibrationResult:
    """Exhaustive grid search for the regret-minimizing weight vector.

    Scans every simplex candidate in lexicographic order and keeps the
    first minimum.  Rejects any record tagged as test partition.
    """
    if profile is None:
        profile = regime_defaults()[regime_id]
    if cost is None:
        cost = profile.cost
    if cost is None:
        raise ValueError(f"no cost matrix available for regime {regime_id!r}")
    _guard_calibration_only(records)
    arrays = _RecordArrays(records)
    grid = enumerate_simplex(resolution)
    best_weights = None
    best_regret = None
    for candidate in grid:
        r = _regret(arrays, profile, candidate, cost)
        if best_regret is None or r < best_regret:
            best_regret = r
            best_weights = candidate
    return CalibrationResult(
        regime_id=regime_id, weights=best_weights, regret=best_regret,
        resolution=resolution, candidate_count=len(grid), seed=seed)


def calibrate_all(records: Sequence[ScoreRecord],
                  resolution: float = DEFAULT_RESOLUTION,
                  profiles: Mapping[str, RegimeProfile] | None = None,
                  seed: int = 0) -> dict[str, CalibrationResult]:
    """calibrate_weights over every regime profile, independently."""
    if profiles is None:
        profiles = regime_defaults()
    return {
        rid: calibrate_weights(records, rid, cost=prof.cost,
                               resolution=resolution, profile=prof, seed=seed)
        for rid, prof in profiles.items()
    }
