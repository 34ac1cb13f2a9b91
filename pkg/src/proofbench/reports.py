"""Report generation: detection-rate tables, modality breakdowns,
sufficiency grids, calibrated-weight summaries, effect sizes, and ROC
coordinate exports.

Every table is emitted twice, as JSON Lines for machines and as an
aligned text rendering of the same rounded values, so the two views
never disagree.  All randomness (bootstrap resamples, the sampled null
reference) is seeded from the report seed; a rerun over the same inputs
is byte-identical.

Effect sizes compare the fused score against the strongest single
watermark statistic on a shared null-percentile scale.  The fused score
is ranked against a large sampled null of the graded channels alone;
the binary provenance channel is deliberately excluded from that
reference because its point mass at the fire value floors percentile
resolution for every record above it, which would swamp the graded
comparison the effect size is about.  The watermark percentile uses the
oracle's analytic null.  Both choices are recorded in the bundle
metadata.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm

from . import __version__ as _pkg_version
from .benchmark import combined_scores, select_records
from .calibration import PARTITION_TEST, CalibrationResult
from .core import (
    COMPONENT_WATERMARK,
    FORMAT_VERSION,
    MODALITIES,
    QUANTITATIVE_TIERS,
    RegimeProfile,
    ScoreRecord,
    TRUTH_MARKED,
    canonical_json,
    regime_defaults,
)
from .detectors import cell_seed
from .stats import (
    BootstrapConfig,
    SufficiencyRule,
    bonferroni,
    bootstrap_ci,
    cliffs_delta,
    holm,
    paired_bootstrap_test,
    sufficiency_table,
)

DEFAULT_NULL_REFERENCE_SIZE = 2_000_000
# Paired comparisons are corrected as one family across the tier ladder.
COMPARISON_FAMILY = tuple(QUANTITATIVE_TIERS)
ROC_FPR_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3)
ROUND_DIGITS = 6

TABLE_DETECTION = "detection_rates"
TABLE_MODALITY = "modality_rates"
TABLE_SUFFICIENCY = "sufficiency_grid"
TABLE_WEIGHTS = "regime_weights"
TABLE_EFFECTS = "effect_sizes"
TABLE_ROC = "roc_coordinates"
TABLE_NAMES = (TABLE_DETECTION, TABLE_MODALITY, TABLE_SUFFICIENCY,
               TABLE_WEIGHTS, TABLE_EFFECTS, TABLE_ROC)


@dataclass(frozen=True)
class ReportConfig:
    seed: int = 20260301
    resamples: int = 1000
    level: float = 0.95
    null_reference_size: int = DEFAULT_NULL_REFERENCE_SIZE

    def __post_init__(self):
        if self.resamples < 100:
            raise ValueError("shipped reports need at least 100 resamples")
        if not (0.0 < self.level < 1.0):
            raise ValueError("confidence level must lie in (0, 1)")
        if self.null_reference_size < 1000:
            raise ValueError("null reference is too small to rank against")

    def bootstrap(self, *parts) -> BootstrapConfig:
        return BootstrapConfig(n_resamples=self.resamples, level=self.level,
                               seed=cell_seed(self.seed, "report", *parts))


def _round(value: float) -> float:
    return round(float(value), ROUND_DIGITS)


def graded_null_reference(weights: Sequence[float], size: int,
                          seed: int) -> np.ndarray:
    """Sorted null sample of the fused score with the provenance channel
    silent: 1 - (1 - w2 u)(1 - w3 v) over independent uniform unit scores."""
    _, w2, w3 = weights
    rng = np.random.default_rng(cell_seed(seed, "report", "null-reference"))
    u = rng.random(size)
    v = rng.random(size)
    return np.sort(1.0 - (1.0 - w2 * u) * (1.0 - w3 * v))


def _marked_test(records: Sequence[ScoreRecord]) -> list[ScoreRecord]:
    test = [r for r in records if r.partition == PARTITION_TEST
            and r.truth == TRUTH_MARKED]
    if not test:
        raise ValueError("no marked test-partition records; run the "
                         "calibration split before evaluating")
    return test


def detection_table(records: Sequence[ScoreRecord],
                    thresholds: Mapping[str, float], tau_combined: float,
                    weights: Sequence[float],
                    targets: Mapping[str, Mapping[int, float]],
                    cfg: ReportConfig) -> list[dict]:
    """Detection rate per (scheme, tier) at the calibrated thresholds,
    with bootstrap CI and the published target alongside.

    The combined row uses the fused score against its own null-calibrated
    threshold; scheme rows use raw statistics against theirs.
    """
    test = _marked_test(records)
    rows = []
    schemes = sorted(thresholds) + ["combined"]
    for scheme in schemes:
        for tier in QUANTITATIVE_TIERS:
            cell = select_records(test, tier=tier)
            if not cell:
                raise ValueError(f"empty detection cell: {scheme} tier {tier}")
            if scheme == "combined":
                hits = (combined_scores(cell, tuple(weights))
                        > tau_combined).astype(float)
            else:
                th = thresholds[scheme]
                hits = np.array([float(r.raw_scores[scheme] > th)
                                 for r in cell])
            ci = bootstrap_ci(hits, cfg=cfg.bootstrap("detect", scheme, tier))
            rows.append({
                "scheme": scheme,
                "tier": tier,
                "n": int(hits.size),
                "tpr": _round(hits.mean()),
                "ci_lo": _round(ci.lo),
                "ci_hi": _round(ci.hi),
                "target": _round(targets[scheme][tier])
                          if scheme in targets else None,
            })
    return rows


def modality_table(records: Sequence[ScoreRecord], tau_combined: float,
                   weights: Sequence[float], cfg: ReportConfig) -> list[dict]:
    """Fused-score detection rate per (modality, tier)."""
    test = _marked_test(records)
    rows = []
    for modality in MODALITIES:
        for tier in QUANTITATIVE_TIERS:
            cell = select_records(test, tier=tier, modality=modality)
            if not cell:
                raise ValueError(f"empty modality cell: {modality} tier {tier}")
            hits = (combined_scores(cell, tuple(weights))
                    > tau_combined).astype(float)
            ci = bootstrap_ci(hits, cfg=cfg.bootstrap("modality", modality,
                                                      tier))
            rows.append({
                "modality": modality,
                "tier": tier,
                "n": int(hits.size),
                "tpr": _round(hits.mean()),
                "ci_lo": _round(ci.lo),
                "ci_hi": _round(ci.hi),
            })
    return rows


SUFFICIENCY_TIERS = (1, 2, 3, 4)


def sufficiency_grid(detection_rows: Sequence[dict],
                     profiles: Mapping[str, RegimeProfile]) -> list[dict]:
    """Per-regime marks over tiers 1-4: does the fused system's detection
    level support the regime's acceptance bar tau?

    supported when the CI lower bound clears tau, contestable when only
    the point estimate does, not-supported otherwise.
    """
    combined = {(r["tier"]): r for r in detection_rows
                if r["scheme"] == "combined"}
    estimates = {}
    for rid in profiles:
        for tier in SUFFICIENCY_TIERS:
            if tier not in combined:
                raise ValueError(f"missing combined detection cell for "
                                 f"tier {tier}")
            cell = combined[tier]
            estimates[(rid, tier)] = (cell["tpr"], cell["ci_lo"])
    rules = {rid: SufficiencyRule(requirement=prof.tau)
             for rid, prof in profiles.items()}
    marks = sufficiency_table(estimates, rules, SUFFICIENCY_TIERS)
    rows = []
    for rid in sorted(profiles):
        for tier in SUFFICIENCY_TIERS:
            point, lo = estimates[(rid, tier)]
            rows.append({
                "regime": rid,
                "tier": tier,
                "estimate": _round(point),
                "ci_lo": _round(lo),
                "requirement": _round(profiles[rid].tau),
                "mark": marks[rid][tier],
            })
    return rows


def weight_table(calibration: Mapping[str, CalibrationResult],
                 profiles: Mapping[str, RegimeProfile]) -> list[dict]:
    """Calibrated weights next to the shipped baseline per regime, with
    the largest per-coordinate deviation in grid steps."""
    rows = []
    for rid in sorted(profiles):
        if rid not in calibration:
            raise ValueError(f"missing calibration result for regime {rid!r}")
        result = calibration[rid]
        baseline = profiles[rid].weights
        deviation = max(abs(a - b) for a, b in zip(result.weights, baseline))
        rows.append({
            "regime": rid,
            "weights": [_round(w) for w in result.weights],
            "baseline": [_round(w) for w in baseline],
            "regret": _round(result.regret),
            "resolution": _round(result.resolution),
            "max_deviation": _round(deviation),
            "within_one_step": bool(deviation <= result.resolution + 1e-9),
        })
    return rows


def effect_size_table(records: Sequence[ScoreRecord],
                      watermark_scheme: str, gauss_threshold: float,
                      tau_combined: float, weights: Sequence[float],
                      cfg: ReportConfig) -> list[dict]:
    """Paired fused-vs-watermark comparison per tier: TPR difference
    significance (raw, Bonferroni over the tier family, Holm alongside)
    and Cliff's delta on the shared null-percentile scale."""
    test = _marked_test(records)
    reference = graded_null_reference(tuple(weights),
                                      cfg.null_reference_size, cfg.seed)
    raw_ps = []
    deltas = {}
    counts = {}
    diffs = {}
    for tier in COMPARISON_FAMILY:
        cell = select_records(test, tier=tier)
        if not cell:
            raise ValueError(f"empty effect-size cell: tier {tier}")
        fused = combined_scores(cell, tuple(weights))
        raw = np.array([r.raw_scores[watermark_scheme] for r in cell])
        fused_hits = (fused > tau_combined).astype(float)
        mark_hits = (raw > gauss_threshold).astype(float)
        raw_ps.append(paired_bootstrap_test(
            fused_hits, mark_hits, cfg=cfg.bootstrap("paired", tier)))
        fused_pct = np.searchsorted(reference, fused,
                                    side="right") / reference.size
        mark_pct = norm.cdf(raw)
        deltas[tier] = cliffs_delta(fused_pct, mark_pct,
                                    cfg=cfg.bootstrap("delta", tier))
        counts[tier] = len(cell)
        diffs[tier] = float(fused_hits.mean() - mark_hits.mean())
    holm_ps = holm(raw_ps)
    rows = []
    for i, tier in enumerate(COMPARISON_FAMILY):
        d = deltas[tier]
        rows.append({
            "tier": tier,
            "n": counts[tier],
            "tpr_difference": _round(diffs[tier]),
            "p_raw": _round(raw_ps[i]),
            "p_bonferroni": _round(bonferroni(raw_ps[i],
                                              len(COMPARISON_FAMILY))),
            "p_holm": _round(holm_ps[i]),
            "delta": _round(d.delta),
            "delta_ci_lo": _round(d.lo),
            "delta_ci_hi": _round(d.hi),
        })
    return rows


def roc_table(records: Sequence[ScoreRecord],
              gauss_nulls: Mapping[str, np.ndarray],
              combined_null: np.ndarray,
              weights: Sequence[float]) -> list[dict]:
    """Detection rate at a ladder of null-calibrated operating points,
    exported as coordinates rather than plots."""
    test = _marked_test(records)
    rows = []
    for scheme in sorted(gauss_nulls) + ["combined"]:
        nulls = np.sort(np.asarray(
            combined_null if scheme == "combined" else gauss_nulls[scheme],
            dtype=float))
        for tier in QUANTITATIVE_TIERS:
            cell = select_records(test, tier=tier)
            if not cell:
                raise ValueError(f"empty roc cell: {scheme} tier {tier}")
            if scheme == "combined":
                scores = combined_scores(cell, tuple(weights))
            else:
                scores = np.array([r.raw_scores[scheme] for r in cell])
            for fpr in ROC_FPR_GRID:
                th = float(np.quantile(nulls, 1.0 - fpr, method="higher"))
                rows.append({
                    "scheme": scheme,
                    "tier": tier,
                    "fpr": fpr,
                    "threshold": _round(th),
                    "tpr": _round(np.mean(scores > th)),
                })
    return rows


_TEXT_LAYOUT = {
    TABLE_DETECTION: ("scheme", "tier", "n", "tpr", "ci_lo", "ci_hi",
                      "target"),
    TABLE_MODALITY: ("modality", "tier", "n", "tpr", "ci_lo", "ci_hi"),
    TABLE_SUFFICIENCY: ("regime", "tier", "estimate", "ci_lo", "requirement",
                        "mark"),
    TABLE_WEIGHTS: ("regime", "weights", "baseline", "regret",
                    "max_deviation", "within_one_step"),
    TABLE_EFFECTS: ("tier", "n", "tpr_difference", "p_raw", "p_bonferroni",
                    "p_holm", "delta", "delta_ci_lo", "delta_ci_hi"),
    TABLE_ROC: ("scheme", "tier", "fpr", "threshold", "tpr"),
}


def _cell_text(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    if isinstance(value, list):
        return "/".join(format(v, ".6g") for v in value)
    if value is None:
        return "-"
    return str(value)


def render_text(name: str, rows: Sequence[dict]) -> str:
    """Aligned text view of a table's rounded values."""
    columns = _TEXT_LAYOUT[name]
    grid = [[_cell_text(row.get(col)) for col in columns] for row in rows]
    widths = [max(len(col), *(len(line[i]) for line in grid))
              for i, col in enumerate(columns)]
    out = ["  ".join(col.ljust(widths[i]) for i, col in enumerate(columns))]
    for line in grid:
        out.append("  ".join(cell.ljust(widths[i])
                             for i, cell in enumerate(line)).rstrip())
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ReportBundle:
    tables: Mapping[str, tuple[dict, ...]]
    metadata: Mapping[str, object]
    paths: tuple[str, ...] = field(default=())


def build_reports(records: Sequence[ScoreRecord],
                  calibration: Mapping[str, CalibrationResult],
                  thresholds: Mapping[str, float], tau_combined: float,
                  weights: Sequence[float], watermark_scheme: str,
                  targets: Mapping[str, Mapping[int, float]],
                  gauss_nulls: Mapping[str, np.ndarray],
                  combined_null: np.ndarray,
                  profiles: Mapping[str, RegimeProfile] | None = None,
                  cfg: ReportConfig = ReportConfig()) -> ReportBundle:
    """Compute every table over the marked test partition."""
    if profiles is None:
        profiles = regime_defaults()
    detection = detection_table(records, thresholds, tau_combined, weights,
                                targets, cfg)
    tables = {
        TABLE_DETECTION: tuple(detection),
        TABLE_MODALITY: tuple(modality_table(records, tau_combined, weights,
                                             cfg)),
        TABLE_SUFFICIENCY: tuple(sufficiency_grid(detection, profiles)),
        TABLE_WEIGHTS: tuple(weight_table(calibration, profiles)),
        TABLE_EFFECTS: tuple(effect_size_table(
            records, watermark_scheme, thresholds[watermark_scheme],
            tau_combined, weights, cfg)),
        TABLE_ROC: tuple(roc_table(records, gauss_nulls, combined_null,
                                   weights)),
    }
    metadata = {
        "format_version": FORMAT_VERSION,
        "tool_version": _pkg_version,
        "seed": cfg.seed,
        "bootstrap": {"resamples": cfg.resamples, "level": cfg.level,
                      "method": "percentile",
                      "p_floor": _round(1.0 / (cfg.resamples + 1))},
        "comparison_family_size": len(COMPARISON_FAMILY),
        "effect_scale": {
            "fused": "percentile against sampled graded-channel null "
                     "(provenance excluded: point mass floors resolution)",
            "watermark": "analytic null CDF",
            "null_reference_size": cfg.null_reference_size,
            "delta_ci": "bootstrap",
        },
        "weights": [_round(w) for w in weights],
        "watermark_scheme": watermark_scheme,
        "tau_combined": _round(tau_combined),
        "tables": list(TABLE_NAMES),
    }
    return ReportBundle(tables=tables, metadata=metadata)


def write_bundle(bundle: ReportBundle, out_dir) -> ReportBundle:
    """Write JSON Lines plus text rendering per table and the bundle
    metadata; returns the bundle with output paths recorded."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in TABLE_NAMES:
        rows = bundle.tables[name]
        jsonl = os.path.join(out_dir, f"{name}.jsonl")
        with open(jsonl, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(canonical_json({"format_version": FORMAT_VERSION,
                                         **row}))
                fh.write("\n")
        text = os.path.join(out_dir, f"{name}.txt")
        with open(text, "w", encoding="utf-8") as fh:
            fh.write(render_text(name, rows))
        paths.extend([jsonl, text])
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(bundle.metadata))
        fh.write("\n")
    paths.append(meta_path)
    return ReportBundle(tables=bundle.tables, metadata=bundle.metadata,
                        paths=tuple(paths))


def load_table(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad table row: {exc}") \
                    from exc
            if row.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"{path}:{lineno}: unsupported table row "
                                 f"format_version {row.get('format_version')!r}")
            rows.append(row)
    return rows
