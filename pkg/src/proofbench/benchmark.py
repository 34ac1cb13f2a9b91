"""Synthetic benchmark generator.

Builds score records whose per-scheme detection rates hit the published
per-tier targets, and whose fused combined score hits the published
combined row under the record-level fusion rule.  Three channels feed
each record: a binary provenance check (near-certain on unlaundered
marked items, rare false fires on naturals), graded watermark statistics
per scheme, and a graded attestation statistic.

The attestation channel is a survival mixture: a pipeline either strips
the attestation material (statistic stays at null) or leaves a verifiable
residue (statistic shifts by the scheme's per-tier strength).  The
per-tier survival prevalence is solved at generation time so the fused
score lands on the combined reference row.

Null calibration uses a dedicated reservoir of natural-media scores,
separate from the benchmark's own natural records, mirroring how
detection thresholds are set against an external natural distribution
rather than the evaluation items themselves.  The benchmark's natural
records deliberately drift from that reservoir: deployment media run
through capture pipelines that push watermark statistics slightly high,
while their attestation statistics sit low because natural media carry
no attestation attempt at all (the reservoir null is built against
attempted-but-invalid attestations, the harder null).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import (
    COMPONENT_ATTESTATION,
    COMPONENT_PROVENANCE,
    COMPONENT_WATERMARK,
    FORMAT_VERSION,
    MODALITIES,
    QUANTITATIVE_TIERS,
    ScoreRecord,
    TRUTH_MARKED,
    TRUTH_NATURAL,
)
from .detectors import (
    DetectorSpec,
    FusionConfig,
    KIND_BINARY,
    KIND_GAUSSIAN,
    KIND_REFERENCE,
    calibrate_threshold,
    cell_seed,
    load_detector_suite,
)

DEFAULT_SEED = 20260301
DEFAULT_N_PER_TIER = 2000
DEFAULT_N_NATURAL = 2000
# Null reservoir is much larger than the record stream so threshold noise
# stays well below the per-cell tolerance of the reproduction targets.
DEFAULT_RESERVOIR_SIZE = 24000
DEFAULT_SOLVER_DRAWS = 200000
SOLVER_TPR_TOL = 5e-4
# When provenance alone saturates the fused rate, prevalence has no
# leverage on it and is pinned at the ecosystem default instead.
PREVALENCE_DEFAULT = 0.99
MIN_PREVALENCE_LEVERAGE = 0.005
# Drift of benchmark natural records relative to the calibration
# reservoir (raw-score scale); see the module docstring.
DEFAULT_NATURAL_WATERMARK_DRIFT = 0.5
DEFAULT_NATURAL_ATTESTATION_DRIFT = -1.5

PROVENANCE_SCHEME = "c2pa"
ATTESTATION_SCHEME = "attestation"

TIER_PIPELINES: Mapping[int, tuple] = {
    0: (None,),
    1: (None,),
    2: ("P1", "P2"),
    3: ("P3",),
    4: ("P4", "P5", "P6"),
}

NATURAL_GENERATOR = "natural-capture"


def packaged_detector_suite() -> tuple[dict[str, DetectorSpec], FusionConfig]:
    ref = importlib.resources.files("proofbench").joinpath("data/detectors.json")
    with importlib.resources.as_file(ref) as path:
        return load_detector_suite(path)


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = DEFAULT_SEED
    n_per_tier: int = DEFAULT_N_PER_TIER
    n_natural: int = DEFAULT_N_NATURAL
    reservoir_size: int = DEFAULT_RESERVOIR_SIZE
    solver_draws: int = DEFAULT_SOLVER_DRAWS
    target_fpr: float = 1e-3
    natural_watermark_drift: float = DEFAULT_NATURAL_WATERMARK_DRIFT
    natural_attestation_drift: float = DEFAULT_NATURAL_ATTESTATION_DRIFT

    def __post_init__(self):
        if min(self.n_per_tier, self.n_natural, self.reservoir_size,
               self.solver_draws) <= 0:
            raise ValueError("population sizes must be positive")


@dataclass(frozen=True)
class Reservoir:
    """Sorted null scores per scheme plus the derived thresholds.

    thresholds are on the raw-score scale; tau_combined is the fused
    score's detection threshold at the target FPR under the null model
    (independent channels, uniform unit scores, rare provenance fires).
    """

    size: int
    gauss_nulls: Mapping[str, np.ndarray]
    prov_fire_rate: float
    thresholds: Mapping[str, float]
    tau_combined: float
    combined_null: np.ndarray

    def unit(self, scheme: str, raws) -> np.ndarray:
        nulls = self.gauss_nulls[scheme]
        return np.searchsorted(nulls, np.asarray(raws, dtype=float),
                               side="right") / nulls.size


def build_reservoir(specs: Mapping[str, DetectorSpec], fusion: FusionConfig,
                    seed: int, size: int = DEFAULT_RESERVOIR_SIZE,
                    target_fpr: float = 1e-3) -> Reservoir:
    gauss_nulls = {}
    thresholds = {}
    for sid, spec in specs.items():
        if spec.kind != KIND_GAUSSIAN:
            continue
        rng = np.random.default_rng(cell_seed(seed, "reservoir", sid))
        nulls = np.sort(rng.standard_normal(size))
        gauss_nulls[sid] = nulls
        thresholds[sid] = calibrate_threshold(nulls, target_fpr)

    prov = specs[PROVENANCE_SCHEME]
    rng = np.random.default_rng(cell_seed(seed, "reservoir", PROVENANCE_SCHEME))
    fires = (rng.random(size) < prov.natural_fire_rate).astype(float)
    thresholds[PROVENANCE_SCHEME] = calibrate_threshold(fires, target_fpr)

    # Null model of the fused score: provenance fires at its natural rate,
    # watermark and attestation unit scores are independent null ranks.
    rng = np.random.default_rng(cell_seed(seed, "reservoir", "combined"))
    w1, w2, w3 = fusion.weights
    sigma = (rng.random(size) < prov.natural_fire_rate).astype(float)
    u = rng.permutation(np.arange(1, size + 1)) / size
    v = rng.permutation(np.arange(1, size + 1)) / size
    combined = 1.0 - (1.0 - w1 * sigma) * (1.0 - w2 * u) * (1.0 - w3 * v)
    tau_combined = calibrate_threshold(combined, target_fpr)

    return Reservoir(size=size, gauss_nulls=gauss_nulls,
                     prov_fire_rate=prov.natural_fire_rate,
                     thresholds=thresholds, tau_combined=tau_combined,
                     combined_null=np.sort(combined))


def _combined(weights, sigma, u, v) -> np.ndarray:
    w1, w2, w3 = weights
    return 1.0 - (1.0 - w1 * sigma) * (1.0 - w2 * u) * (1.0 - w3 * v)


def solve_attestation_prevalence(specs: Mapping[str, DetectorSpec],
                                 fusion: FusionConfig, reservoir: Reservoir,
                                 seed: int,
                                 draws: int = DEFAULT_SOLVER_DRAWS
                                 ) -> tuple[dict[int, float], list[str]]:
    """Per-tier attestation survival rates that make the fused score hit
    the reference row's targets at the reservoir's combined threshold.

    A record's attestation statistic is null plus the scheme's per-tier
    strength when the attestation survived the pipeline, plain null when
    it was stripped.  Bisects on the survival prevalence with all other
    randomness frozen, so the result is deterministic given the seed.

    On unlaundered tiers the provenance channel saturates the fused rate
    and prevalence has no measurable leverage; those tiers get the
    ecosystem default prevalence instead of a degenerate solve.
    """
    if fusion.derive_attestation_from is None:
        raise ValueError("fusion config names no reference row to solve against")
    reference = specs[fusion.derive_attestation_from]
    if reference.kind != KIND_REFERENCE:
        raise ValueError(f"{reference.scheme} is not a reference row")
    prov = specs[PROVENANCE_SCHEME]
    mark = specs[fusion.watermark_scheme]
    att = specs[ATTESTATION_SCHEME]

    prevalence: dict[int, float] = {}
    warnings: list[str] = []
    for tier in QUANTITATIVE_TIERS:
        target = reference.target_for(tier)
        strength = att.shift_for(tier)
        rng = np.random.default_rng(cell_seed(seed, "solver", tier))
        sigma = (rng.random(draws) < prov.target_for(tier)).astype(float)
        u = reservoir.unit(mark.scheme,
                           rng.standard_normal(draws) + mark.shift_for(tier))
        base = rng.standard_normal(draws)
        survival = rng.random(draws)

        def tpr(lam: float) -> float:
            raw = base + np.where(survival < lam, strength, 0.0)
            v = reservoir.unit(ATTESTATION_SCHEME, raw)
            c = _combined(fusion.weights, sigma, u, v)
            return float(np.count_nonzero(c > reservoir.tau_combined) / draws)

        lo, hi = 0.0, 1.0
        tpr_lo, tpr_hi = tpr(lo), tpr(hi)
        if tpr_hi - tpr_lo < MIN_PREVALENCE_LEVERAGE:
            prevalence[tier] = PREVALENCE_DEFAULT
            warnings.append(
                f"tier {tier}: fused rate is provenance-saturated "
                f"({tpr_lo:.4f}..{tpr_hi:.4f} vs target {target}); "
                f"prevalence pinned at default {PREVALENCE_DEFAULT}")
            continue
        if tpr_lo >= target:
            prevalence[tier] = lo
            warnings.append(
                f"tier {tier}: combined target {target} below the reachable "
                f"floor {tpr_lo:.4f}; prevalence clamped to 0")
            continue
        if tpr_hi < target:
            prevalence[tier] = hi
            warnings.append(
                f"tier {tier}: combined target {target} above the reachable "
                f"ceiling {tpr_hi:.4f}; prevalence clamped to 1")
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            t = tpr(mid)
            if abs(t - target) <= SOLVER_TPR_TOL:
                lo = hi = mid
                break
            if t < target:
                lo = mid
            else:
                hi = mid
        prevalence[tier] = 0.5 * (lo + hi)
    return prevalence, warnings


@dataclass(frozen=True)
class BenchmarkSummary:
    seed: int
    n_per_tier: int
    n_natural: int
    reservoir_size: int
    solver_draws: int
    target_fpr: float
    weights: tuple[float, float, float]
    watermark_scheme: str
    attestation_strength: Mapping[int, float]
    attestation_prevalence: Mapping[int, float]
    natural_watermark_drift: float
    natural_attestation_drift: float
    scheme_thresholds: Mapping[str, float]
    tau_combined: float
    combined_targets: Mapping[int, float]
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "seed": self.seed,
            "n_per_tier": self.n_per_tier,
            "n_natural": self.n_natural,
            "reservoir_size": self.reservoir_size,
            "solver_draws": self.solver_draws,
            "target_fpr": self.target_fpr,
            "weights": list(self.weights),
            "watermark_scheme": self.watermark_scheme,
            "attestation_strength": {str(t): s for t, s
                                     in sorted(self.attestation_strength.items())},
            "attestation_prevalence": {str(t): s for t, s
                                       in sorted(self.attestation_prevalence.items())},
            "natural_watermark_drift": self.natural_watermark_drift,
            "natural_attestation_drift": self.natural_attestation_drift,
            "scheme_thresholds": dict(sorted(self.scheme_thresholds.items())),
            "tau_combined": self.tau_combined,
            "combined_targets": {str(t): v for t, v
                                 in sorted(self.combined_targets.items())},
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class BenchmarkRun:
    records: tuple[ScoreRecord, ...]
    summary: BenchmarkSummary
    reservoir: Reservoir


def _marked_labels(tier: int, index: int) -> tuple[str, str, str | None]:
    modality = MODALITIES[index % len(MODALITIES)]
    generator = f"{modality}-gen-{'ab'[(index // len(MODALITIES)) % 2]}"
    options = TIER_PIPELINES[tier]
    pipeline = options[index % len(options)]
    return modality, generator, pipeline


def generate_benchmark(cfg: BenchmarkConfig = BenchmarkConfig(),
                       specs: Mapping[str, DetectorSpec] | None = None,
                       fusion: FusionConfig | None = None) -> BenchmarkRun:
    """Generate the full record stream: n_per_tier marked records for each
    quantitative tier plus n_natural natural records, all scored against a
    shared null reservoir."""
    if specs is None or fusion is None:
        packaged_specs, packaged_fusion = packaged_detector_suite()
        specs = specs or packaged_specs
        fusion = fusion or packaged_fusion

    reservoir = build_reservoir(specs, fusion, cfg.seed, cfg.reservoir_size,
                                cfg.target_fpr)
    prevalence, warnings = solve_attestation_prevalence(
        specs, fusion, reservoir, cfg.seed, cfg.solver_draws)
    prov = specs[PROVENANCE_SCHEME]
    att = specs[ATTESTATION_SCHEME]
    gauss_schemes = [sid for sid, s in specs.items()
                     if s.kind == KIND_GAUSSIAN and sid != ATTESTATION_SCHEME]
    reference = specs[fusion.derive_attestation_from]

    records: list[ScoreRecord] = []
    for tier in QUANTITATIVE_TIERS:
        n = cfg.n_per_tier
        rng = np.random.default_rng(cell_seed(cfg.seed, "marked",
                                              tier, PROVENANCE_SCHEME))
        sigma = (rng.random(n) < prov.target_for(tier)).astype(float)
        raws = {PROVENANCE_SCHEME: sigma}
        units = {}
        for sid in gauss_schemes:
            cell = np.random.default_rng(cell_seed(cfg.seed, "marked", tier, sid))
            raws[sid] = cell.standard_normal(n) + specs[sid].shift_for(tier)
            units[sid] = reservoir.unit(sid, raws[sid])
        cell = np.random.default_rng(cell_seed(cfg.seed, "marked", tier,
                                               ATTESTATION_SCHEME))
        survived = cell.random(n) < prevalence[tier]
        raws[ATTESTATION_SCHEME] = cell.standard_normal(n) + np.where(
            survived, att.shift_for(tier), 0.0)
        att_unit = reservoir.unit(ATTESTATION_SCHEME, raws[ATTESTATION_SCHEME])
        mark_unit = units[fusion.watermark_scheme]

        for i in range(n):
            modality, generator, pipeline = _marked_labels(tier, i)
            records.append(ScoreRecord(
                item_id=f"syn-t{tier}-{i:05d}",
                modality=modality, generator=generator, tier=tier,
                pipeline=pipeline, truth=TRUTH_MARKED,
                raw_scores={sid: float(vals[i]) for sid, vals in raws.items()},
                unit_scores={
                    COMPONENT_PROVENANCE: float(sigma[i]),
                    COMPONENT_WATERMARK: float(mark_unit[i]),
                    COMPONENT_ATTESTATION: float(att_unit[i]),
                },
            ))

    n = cfg.n_natural
    rng = np.random.default_rng(cell_seed(cfg.seed, "natural", PROVENANCE_SCHEME))
    sigma = (rng.random(n) < prov.natural_fire_rate).astype(float)
    raws = {PROVENANCE_SCHEME: sigma}
    units = {}
    for sid in gauss_schemes:
        cell = np.random.default_rng(cell_seed(cfg.seed, "natural", sid))
        raws[sid] = cell.standard_normal(n) + cfg.natural_watermark_drift
        units[sid] = reservoir.unit(sid, raws[sid])
    cell = np.random.default_rng(cell_seed(cfg.seed, "natural",
                                           ATTESTATION_SCHEME))
    raws[ATTESTATION_SCHEME] = (cell.standard_normal(n)
                                + cfg.natural_attestation_drift)
    att_unit = reservoir.unit(ATTESTATION_SCHEME, raws[ATTESTATION_SCHEME])
    mark_unit = units[fusion.watermark_scheme]
    for i in range(n):
        records.append(ScoreRecord(
            item_id=f"nat-{i:05d}",
            modality=MODALITIES[i % len(MODALITIES)],
            generator=NATURAL_GENERATOR, tier=0, pipeline=None,
            truth=TRUTH_NATURAL,
            raw_scores={sid: float(vals[i]) for sid, vals in raws.items()},
            unit_scores={
                COMPONENT_PROVENANCE: float(sigma[i]),
                COMPONENT_WATERMARK: float(mark_unit[i]),
                COMPONENT_ATTESTATION: float(att_unit[i]),
            },
        ))

    summary = BenchmarkSummary(
        seed=cfg.seed, n_per_tier=cfg.n_per_tier, n_natural=cfg.n_natural,
        reservoir_size=cfg.reservoir_size, solver_draws=cfg.solver_draws,
        target_fpr=cfg.target_fpr,
        weights=fusion.weights, watermark_scheme=fusion.watermark_scheme,
        attestation_strength={t: att.shift_for(t)
                              for t in QUANTITATIVE_TIERS},
        attestation_prevalence=prevalence,
        natural_watermark_drift=cfg.natural_watermark_drift,
        natural_attestation_drift=cfg.natural_attestation_drift,
        scheme_thresholds=dict(reservoir.thresholds),
        tau_combined=reservoir.tau_combined,
        combined_targets={t: reference.target_for(t)
                          for t in QUANTITATIVE_TIERS},
        warnings=tuple(warnings),
    )
    return BenchmarkRun(records=tuple(records), summary=summary,
                        reservoir=reservoir)


def combined_scores(records: Sequence[ScoreRecord],
                    weights: tuple[float, float, float]) -> np.ndarray:
    """Fused score per record from its component unit scores."""
    sigma = np.array([r.unit_scores.get(COMPONENT_PROVENANCE, 0.0)
                      for r in records])
    u = np.array([r.unit_scores.get(COMPONENT_WATERMARK, 0.0)
                  for r in records])
    v = np.array([r.unit_scores.get(COMPONENT_ATTESTATION, 0.0)
                  for r in records])
    return _combined(weights, sigma, u, v)


def select_records(records: Sequence[ScoreRecord], truth: str | None = None,
                   tier: int | None = None,
                   modality: str | None = None) -> list[ScoreRecord]:
    """Filter records; a tier filter selects marked records of that tier
    (natural records carry a placeholder tier and never match it)."""
    out = []
    for r in records:
        if truth is not None and r.truth != truth:
            continue
        if tier is not None and (r.tier != tier or r.truth != TRUTH_MARKED):
            continue
        if modality is not None and r.modality != modality:
            continue
        out.append(r)
    return out
