"""Detector adapters: threshold calibration, score normalization, and the
synthetic score oracle used for desk-scale benchmark reproduction.

Real watermark detectors emit raw statistics on arbitrary scales.  This
module pins down the two operations everything downstream relies on:
calibrating a decision threshold to a target false positive rate on a
null sample (fail-closed on ties), and mapping raw scores onto [0, 1]
through the empirical null CDF.

The oracle replaces heavyweight detector inference with closed-form
populations: unit-variance normal families whose shift is chosen so the
population hits a published true-positive rate at the calibration FPR,
plus binary pass/fail channels for cryptographic checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import norm

from .core import FORMAT_VERSION, QUANTITATIVE_TIERS

DEFAULT_TARGET_FPR = 1e-3
# Degenerate rate targets are clamped here; a detector that is literally
# perfect or literally blind has no finite normal shift.
TPR_CLAMP_LO = 1e-6
TPR_CLAMP_HI = 1.0 - 1e-6

KIND_GAUSSIAN = "gaussian"
KIND_BINARY = "binary"
# Reference rows state published targets for a fused score; they are
# never sampled directly.
KIND_REFERENCE = "reference"
_KINDS = (KIND_GAUSSIAN, KIND_BINARY, KIND_REFERENCE)


def calibrate_threshold(null_scores, target_fpr: float) -> float:
    """Smallest usable detection threshold for a target FPR.

    Takes the empirical (1 - target_fpr) quantile of the null sample with
    the higher order statistic on ties, so the realized rate of nulls
    strictly above the threshold never exceeds the target.  Fail-closed:
    ambiguity always resolves toward fewer false positives.
    """
    nulls = np.asarray(null_scores, dtype=float)
    if nulls.size == 0:
        raise ValueError("cannot calibrate a threshold on an empty null sample")
    if not (0.0 < target_fpr < 1.0):
        raise ValueError(f"target FPR must lie in (0, 1), got {target_fpr!r}")
    return float(np.quantile(nulls, 1.0 - target_fpr, method="higher"))


def unit_score(raw: float, null_scores) -> float:
    """Empirical null CDF value of a raw score, clamped to [0, 1].

    Monotone in raw by construction; a raw below every null maps to 0,
    above every null to 1.
    """
    nulls = np.asarray(null_scores, dtype=float)
    if nulls.size == 0:
        raise ValueError("cannot normalize against an empty null sample")
    return float(np.count_nonzero(nulls <= raw) / nulls.size)


def unit_scores(raws, null_scores) -> np.ndarray:
    """Vectorized unit_score: same definition, one sorted pass."""
    nulls = np.sort(np.asarray(null_scores, dtype=float))
    if nulls.size == 0:
        raise ValueError("cannot normalize against an empty null sample")
    raws = np.asarray(raws, dtype=float)
    return np.searchsorted(nulls, raws, side="right") / nulls.size


@dataclass(frozen=True)
class TprResult:
    """TPR measured at a threshold calibrated on the paired null sample."""

    threshold: float
    tpr: float
    realized_fpr: float
    n_pos: int
    n_null: int


def empirical_tpr_at_fpr(pos_scores, null_scores,
                         target_fpr: float = DEFAULT_TARGET_FPR) -> TprResult:
    """Calibrate on the nulls, then count positives strictly above."""
    pos = np.asarray(pos_scores, dtype=float)
    nulls = np.asarray(null_scores, dtype=float)
    if pos.size == 0:
        raise ValueError("positive sample is empty")
    threshold = calibrate_threshold(nulls, target_fpr)
    tpr = float(np.count_nonzero(pos > threshold) / pos.size)
    realized = float(np.count_nonzero(nulls > threshold) / nulls.size)
    return TprResult(threshold=threshold, tpr=tpr, realized_fpr=realized,
                     n_pos=int(pos.size), n_null=int(nulls.size))


def roc_auc(pos_scores, null_scores) -> float:
    """Probability a random positive outscores a random null, ties half.

    Computed from rank sums (identical to pairwise counting with 0.5 per
    tie, without the quadratic loop).
    """
    pos = np.asarray(pos_scores, dtype=float)
    nulls = np.asarray(null_scores, dtype=float)
    if pos.size == 0 or nulls.size == 0:
        raise ValueError("both samples must be non-empty")
    combined = np.concatenate([pos, nulls])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size, dtype=float)
    ranks[order] = np.arange(1, combined.size + 1)
    # Average ranks across ties so each tied pair contributes 1/2.
    sorted_vals = combined[order]
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    rank_sum = float(ranks[:pos.size].sum())
    n_pos, n_null = pos.size, nulls.size
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_null)


@dataclass(frozen=True)
class DetectorSpec:
    """Synthetic oracle parameters for one scheme.

    tier_tpr maps adversary tier to the true-positive rate the scheme
    should achieve at target_fpr.  gaussian schemes sample unit-variance
    normals with the matching shift; binary schemes are pass/fail with
    natural_fire_rate false fires on null media; reference rows only
    carry targets.
    """

    scheme: str
    kind: str
    tier_tpr: Mapping[int, float]
    target_fpr: float = DEFAULT_TARGET_FPR
    natural_fire_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if not (0.0 < self.target_fpr < 1.0):
            raise ValueError("target_fpr must lie in (0, 1)")
        if not (0.0 <= self.natural_fire_rate < 1.0):
            raise ValueError("natural_fire_rate must lie in [0, 1)")
        for tier, tpr in self.tier_tpr.items():
            if tier not in QUANTITATIVE_TIERS:
                raise ValueError(f"tier {tier} out of range for {self.scheme}")
            if not (0.0 <= tpr <= 1.0):
                raise ValueError(f"target TPR must lie in [0, 1], got {tpr!r}")

    def target_for(self, tier: int) -> float:
        try:
            return self.tier_tpr[tier]
        except KeyError:
            raise ValueError(f"{self.scheme} has no target for tier {tier}") \
                from None

    def shift_for(self, tier: int) -> float:
        """Normal shift hitting the tier target at target_fpr.

        mu = z(1 - fpr) + z(tpr): at the exact-FPR threshold z(1 - fpr)
        the shifted unit normal exceeds it with probability tpr.
        """
        if self.kind != KIND_GAUSSIAN:
            raise ValueError(f"{self.scheme} is not a gaussian-family scheme")
        tpr = min(max(self.target_for(tier), TPR_CLAMP_LO), TPR_CLAMP_HI)
        return float(norm.ppf(1.0 - self.target_fpr) + norm.ppf(tpr))

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "kind": self.kind,
            "tier_tpr": {str(t): v for t, v in sorted(self.tier_tpr.items())},
            "target_fpr": self.target_fpr,
            "natural_fire_rate": self.natural_fire_rate,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DetectorSpec":
        return cls(
            scheme=d["scheme"],
            kind=d["kind"],
            tier_tpr={int(t): float(v) for t, v in d["tier_tpr"].items()},
            target_fpr=float(d.get("target_fpr", DEFAULT_TARGET_FPR)),
            natural_fire_rate=float(d.get("natural_fire_rate", 0.0)),
        )


@dataclass(frozen=True)
class ScorePopulation:
    """Raw scores for one (scheme, tier) cell: marked positives plus the
    natural-media null sample they are calibrated against."""

    scheme: str
    tier: int
    pos: np.ndarray
    null: np.ndarray
    seed: int
    warnings: tuple[str, ...] = field(default=())

    def tpr_at_fpr(self, target_fpr: float = DEFAULT_TARGET_FPR) -> TprResult:
        return empirical_tpr_at_fpr(self.pos, self.null, target_fpr)

    def auc(self) -> float:
        return roc_auc(self.pos, self.null)


def cell_seed(base_seed: int, *parts) -> int:
    """Stable per-cell seed: populations can be generated in any order or
    in parallel workers and still come out identical."""
    material = ":".join([str(base_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(material.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def synth_scores(spec: DetectorSpec, tier: int, n_pos: int, n_null: int,
                 seed: int) -> ScorePopulation:
    """Sample one (scheme, tier) population from the oracle.

    Pure function of (spec, tier, sizes, seed).  Degenerate TPR targets
    are clamped and reported in warnings rather than silently shifted.
    """
    if n_pos <= 0 or n_null <= 0:
        raise ValueError("population sizes must be positive")
    target = spec.target_for(tier)
    rng = np.random.default_rng(cell_seed(seed, spec.scheme, tier))
    warnings: list[str] = []
    if spec.kind == KIND_GAUSSIAN:
        if not (TPR_CLAMP_LO <= target <= TPR_CLAMP_HI):
            warnings.append(
                f"tier {tier} target {target} clamped to "
                f"[{TPR_CLAMP_LO}, {TPR_CLAMP_HI}]")
        shift = spec.shift_for(tier)
        null = rng.standard_normal(n_null)
        pos = rng.standard_normal(n_pos) + shift
    elif spec.kind == KIND_BINARY:
        null = (rng.random(n_null) < spec.natural_fire_rate).astype(float)
        pos = (rng.random(n_pos) < target).astype(float)
    else:
        raise ValueError(f"{spec.scheme} is a reference row; it has no "
                         f"sampling model")
    return ScorePopulation(scheme=spec.scheme, tier=tier, pos=pos, null=null,
                           seed=seed, warnings=tuple(warnings))


@dataclass(frozen=True)
class FusionConfig:
    """How record-level component scores are fused into the combined score
    for benchmark evaluation.

    watermark_scheme names the scheme whose unit score fills the watermark
    slot; weights are the (provenance, watermark, attestation) fusion
    weights; derive_attestation_from names the reference row whose targets
    the attestation channel is solved against at generation time.
    """

    watermark_scheme: str = "gaussian-shading"
    weights: tuple[float, float, float] = (0.5, 0.3, 0.2)
    derive_attestation_from: str | None = "combined-ds"

    def to_dict(self) -> dict:
        return {
            "watermark_scheme": self.watermark_scheme,
            "weights": list(self.weights),
            "derive_attestation_from": self.derive_attestation_from,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FusionConfig":
        return cls(
            watermark_scheme=d.get("watermark_scheme", "gaussian-shading"),
            weights=tuple(float(w) for w in d.get("weights", (0.5, 0.3, 0.2))),
            derive_attestation_from=d.get("derive_attestation_from",
                                          "combined-ds"),
        )


def load_detector_suite(path) -> tuple[dict[str, DetectorSpec], FusionConfig]:
    """Read the detector suite config.

    Schema: {"format_version": 1, "schemes": {"<id>": spec fields},
    "fusion": {...}}; see data/detectors.json for the shipped baseline.
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported detector config format_version "
                         f"{payload.get('format_version')!r}")
    specs = {}
    for sid, spec in payload["schemes"].items():
        spec = dict(spec)
        spec.setdefault("scheme", sid)
        parsed = DetectorSpec.from_dict(spec)
        if parsed.scheme != sid:
            raise ValueError(f"scheme id mismatch: key {sid!r} vs field "
                             f"{parsed.scheme!r}")
        specs[sid] = parsed
    fusion = FusionConfig.from_dict(payload.get("fusion", {}))
    return specs, fusion


def dump_detector_suite(specs: Mapping[str, DetectorSpec],
                        fusion: FusionConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "schemes": {sid: s.to_dict() for sid, s in sorted(specs.items())},
        "fusion": fusion.to_dict(),
    }
