"""proofbench: provenance verification, evidence fusion, and regime-aware
decision benchmarking for synthetic-media forensics."""

__version__ = "0.1.0"

from .core import (
    CostMatrix,
    LaunderingDescriptor,
    ProofObject,
    RegimeProfile,
    ScoreRecord,
    Verdict,
    WatermarkScore,
    canonical_digest,
    canonical_json,
    classify_tier,
    load_regime_profiles,
    read_records,
    regime_defaults,
    write_records,
)
from .fusion import (
    ComponentScores,
    accept_threshold,
    bayes_posterior,
    decide,
    ds_combine,
    likelihood_ratio,
)
from .manifest import (
    Manifest,
    ManifestParseError,
    TrustStore,
    build_attestation,
    build_manifest,
    key_id,
    parse_attestation,
    parse_manifest,
    verify_attestation,
    verify_provenance,
)
from .detectors import (
    DetectorSpec,
    FusionConfig,
    calibrate_threshold,
    empirical_tpr_at_fpr,
    load_detector_suite,
    roc_auc,
    synth_scores,
    unit_score,
)
from .benchmark import (
    BenchmarkConfig,
    BenchmarkRun,
    BenchmarkSummary,
    Reservoir,
    build_reservoir,
    combined_scores,
    generate_benchmark,
    packaged_detector_suite,
    select_records,
    solve_attestation_prevalence,
)
from .calibration import (
    CalibrationResult,
    calibrate_all,
    calibrate_weights,
    enumerate_simplex,
    expected_regret,
    partition,
)
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
from .reports import (
    ReportBundle,
    ReportConfig,
    build_reports,
    graded_null_reference,
    load_table,
    render_text,
    write_bundle,
)
from .audit import (
    AuditCheck,
    RunManifest,
    append_audit,
    config_digest,
    verify_audit_log,
    write_run_manifest,
)
