"""Synthetic benchmark generation: layout, determinism, and the solved
attestation survival rates."""

import numpy as np
import pytest

from proofbench.benchmark import (
    ATTESTATION_SCHEME,
    BenchmarkConfig,
    DEFAULT_SEED,
    NATURAL_GENERATOR,
    PROVENANCE_SCHEME,
    build_reservoir,
    combined_scores,
    generate_benchmark,
    packaged_detector_suite,
    select_records,
    solve_attestation_prevalence,
)
from proofbench.core import MODALITIES, QUANTITATIVE_TIERS, TRUTH_MARKED, TRUTH_NATURAL
from proofbench.detectors import FusionConfig

SMALL = BenchmarkConfig(seed=7, n_per_tier=60, n_natural=60,
                        reservoir_size=4000, solver_draws=4000)

# Survival rates the bisection lands on at the shipped seed.  Pure
# function of the seed, so frozen tight; tiers 0 and 1 are pinned at the
# ecosystem default because provenance saturates the fused rate there.
SOLVED_PREVALENCE = {0: 0.99, 1: 0.99, 2: 0.9912109375, 3: 0.8232421875,
                     4: 0.86328125}


class TestLayout:
    def test_population_counts(self, published_run):
        records = published_run.records
        assert len(records) == 5 * 2000 + 2000
        for tier in QUANTITATIVE_TIERS:
            assert len(select_records(records, tier=tier)) == 2000
        naturals = select_records(records, truth=TRUTH_NATURAL)
        assert len(naturals) == 2000
        assert {r.generator for r in naturals} == {NATURAL_GENERATOR}

    def test_item_ids_unique(self, published_run):
        ids = [r.item_id for r in published_run.records]
        assert len(set(ids)) == len(ids)
        assert "syn-t3-00000" in ids and "nat-00000" in ids

    def test_modalities_cycle(self, published_run):
        marked = select_records(published_run.records, tier=2)
        by_modality = {m: sum(1 for r in marked if r.modality == m)
                       for m in MODALITIES}
        # 2000 over a 3-cycle: near-even split.
        assert set(by_modality.values()) <= {666, 667}

    def test_pipelines_per_tier(self, published_run):
        expect = {0: {None}, 1: {None}, 2: {"P1", "P2"}, 3: {"P3"},
                  4: {"P4", "P5", "P6"}}
        for tier, pipelines in expect.items():
            marked = select_records(published_run.records, tier=tier)
            assert {r.pipeline for r in marked} == pipelines

    def test_every_record_fully_scored(self, published_run):
        components = {"provenance", "watermark", "attestation"}
        r = published_run.records[0]
        assert set(r.unit_scores) == components
        assert PROVENANCE_SCHEME in r.raw_scores
        assert ATTESTATION_SCHEME in r.raw_scores


class TestDeterminism:
    def test_same_seed_same_records(self):
        a = generate_benchmark(SMALL)
        b = generate_benchmark(SMALL)
        assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
        assert a.summary.to_dict() == b.summary.to_dict()

    def test_seed_changes_scores(self):
        a = generate_benchmark(SMALL)
        b = generate_benchmark(BenchmarkConfig(
            seed=8, n_per_tier=60, n_natural=60, reservoir_size=4000,
            solver_draws=4000))
        assert a.records[0].raw_scores != b.records[0].raw_scores


class TestSolvedPrevalence:
    def test_values_at_shipped_seed(self, published_run):
        prevalence = published_run.summary.attestation_prevalence
        for tier, expected in SOLVED_PREVALENCE.items():
            assert prevalence[tier] == pytest.approx(expected, abs=1e-9)

    def test_saturated_tiers_warn(self, published_run):
        warnings = published_run.summary.warnings
        assert len(warnings) == 2
        assert all("provenance-saturated" in w for w in warnings)
        assert any(w.startswith("tier 0") for w in warnings)
        assert any(w.startswith("tier 1") for w in warnings)

    def test_needs_reference_row(self, detector_suite):
        specs, fusion = detector_suite
        reservoir = build_reservoir(specs, fusion, seed=1, size=2000)
        broken = FusionConfig(watermark_scheme=fusion.watermark_scheme,
                              weights=fusion.weights,
                              derive_attestation_from=None)
        with pytest.raises(ValueError, match="reference"):
            solve_attestation_prevalence(specs, broken, reservoir, seed=1,
                                         draws=1000)
        not_ref = FusionConfig(watermark_scheme=fusion.watermark_scheme,
                               weights=fusion.weights,
                               derive_attestation_from="tree-ring")
        with pytest.raises(ValueError, match="not a reference row"):
            solve_attestation_prevalence(specs, not_ref, reservoir, seed=1,
                                         draws=1000)


class TestReservoir:
    def test_thresholds_match_summary(self, published_run):
        assert dict(published_run.reservoir.thresholds) == \
            dict(published_run.summary.scheme_thresholds)
        assert published_run.reservoir.tau_combined == \
            published_run.summary.tau_combined

    def test_combined_threshold_value(self, published_run):
        assert published_run.summary.tau_combined == pytest.approx(
            0.433846, abs=1e-6)

    def test_provenance_threshold_separates_fires(self, published_run):
        # Binary channel: raw is 0 or 1, threshold 0 means raw > t iff fired.
        assert published_run.reservoir.thresholds[PROVENANCE_SCHEME] == 0.0

    def test_null_fpr_at_thresholds(self, published_run):
        res = published_run.reservoir
        for sid, nulls in res.gauss_nulls.items():
            realized = np.count_nonzero(nulls > res.thresholds[sid]) / nulls.size
            assert realized <= published_run.summary.target_fpr
        realized = np.count_nonzero(
            res.combined_null > res.tau_combined) / res.size
        assert realized <= published_run.summary.target_fpr

    def test_unit_is_rank_fraction(self, published_run):
        res = published_run.reservoir
        nulls = res.gauss_nulls["tree-ring"]
        assert res.unit("tree-ring", [nulls[0] - 1.0])[0] == 0.0
        assert res.unit("tree-ring", [nulls[-1] + 1.0])[0] == 1.0
        mid = res.unit("tree-ring", [np.median(nulls)])[0]
        assert 0.49 <= mid <= 0.51

    def test_rebuild_matches_run(self, published_run, detector_suite):
        specs, fusion = detector_suite
        s = published_run.summary
        again = build_reservoir(specs, fusion, s.seed, s.reservoir_size,
                                s.target_fpr)
        assert again.tau_combined == s.tau_combined
        assert dict(again.thresholds) == dict(s.scheme_thresholds)


class TestNaturalDrift:
    """Naturals are not pure nulls: the watermark channel drifts up and
    the attestation channel drifts down, so combined hits on naturals stay
    a hair above the idealized FPR while attestation stays quiet."""

    def test_watermark_drift_up(self, published_run):
        naturals = select_records(published_run.records, truth=TRUTH_NATURAL)
        raw = np.mean([r.raw_scores["gaussian-shading"] for r in naturals])
        assert raw == pytest.approx(
            published_run.summary.natural_watermark_drift, abs=0.1)
        unit = np.mean([r.unit_scores["watermark"] for r in naturals])
        assert unit > 0.55

    def test_attestation_drift_down(self, published_run):
        naturals = select_records(published_run.records, truth=TRUTH_NATURAL)
        raw = np.mean([r.raw_scores[ATTESTATION_SCHEME] for r in naturals])
        assert raw == pytest.approx(
            published_run.summary.natural_attestation_drift, abs=0.1)
        unit = np.mean([r.unit_scores["attestation"] for r in naturals])
        assert unit < 0.25


class TestCombinedScores:
    def test_matches_hand_formula(self, published_run):
        records = published_run.records[:40]
        weights = published_run.summary.weights
        got = combined_scores(records, weights)
        for r, c in zip(records, got):
            s = r.unit_scores
            expect = 1.0 - ((1 - weights[0] * s["provenance"])
                            * (1 - weights[1] * s["watermark"])
                            * (1 - weights[2] * s["attestation"]))
            assert c == pytest.approx(expect, abs=1e-12)


class TestSelectRecords:
    def test_tier_filter_excludes_naturals(self, published_run):
        # Naturals carry tier 0 as a placeholder; tier selection must not
        # pick them up.
        only = select_records(published_run.records, tier=0)
        assert all(r.truth == TRUTH_MARKED for r in only)

    def test_modality_filter(self, published_run):
        audio = select_records(published_run.records, truth=TRUTH_NATURAL,
                               modality="audio")
        assert audio and all(r.modality == "audio" for r in audio)


class TestConfig:
    def test_sizes_validated(self):
        with pytest.raises(ValueError):
            BenchmarkConfig(n_per_tier=0)

    def test_shipped_defaults(self):
        cfg = BenchmarkConfig()
        assert cfg.seed == DEFAULT_SEED == 20260301
        assert cfg.n_per_tier == cfg.n_natural == 2000

    def test_summary_serializes(self, published_run):
        d = published_run.summary.to_dict()
        assert d["format_version"] == 1
        assert d["attestation_prevalence"]["3"] == pytest.approx(
            SOLVED_PREVALENCE[3])
        assert isinstance(d["warnings"], list)
