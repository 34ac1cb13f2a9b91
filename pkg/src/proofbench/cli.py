"""Command-line front end.

Subcommands cover the whole pipeline: verify one artifact's proof
object, simulate a synthetic benchmark, calibrate regime weights on a
partitioned record stream, evaluate the test partition into a report
bundle, and re-render an existing bundle.

Exit codes: 0 accept (or plain success), 10 reject, 20 defer, 64 usage
error, 65 unreadable or inconsistent input data, 70 internal error.
The verify path never touches benchmark formats, and evaluate never
loads a trust store.

PROOFBENCH_CONFIG names the default config file for whichever subcommand
runs: a regime-profile file for verify/calibrate, a detector-suite file
for simulate/evaluate.  Explicit --config always wins.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import importlib.resources
import json
import os
import sys
import time
import traceback

from . import __version__
from .audit import (
    RunManifest,
    append_audit,
    config_digest,
    write_run_manifest,
)
from .benchmark import (
    ATTESTATION_SCHEME,
    DEFAULT_SEED,
    BenchmarkConfig,
    build_reservoir,
    generate_benchmark,
)
from .calibration import (
    DEFAULT_PARTITION_RATIO,
    DEFAULT_PARTITION_SEED,
    DEFAULT_RESOLUTION,
    PARTITION_CALIBRATION,
    CalibrationResult,
    calibrate_all,
    partition,
)
from .core import (
    DECISION_ACCEPT,
    DECISION_DEFER,
    DECISION_REJECT,
    FORMAT_VERSION,
    ProofObject,
    WatermarkScore,
    canonical_json,
    load_regime_profiles,
    read_records,
    regime_defaults,
    write_records,
)
from .detectors import KIND_REFERENCE, load_detector_suite
from .fusion import ComponentScores, decide
from .manifest import ManifestParseError, load_trust_store, verify_attestation, \
    verify_provenance
from .reports import (
    TABLE_DETECTION,
    TABLE_EFFECTS,
    TABLE_NAMES,
    ReportConfig,
    build_reports,
    load_table,
    render_text,
    weight_table,
    write_bundle,
)

EXIT_OK = 0
EXIT_REJECT = 10
EXIT_DEFER = 20
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

DECISION_EXIT = {
    DECISION_ACCEPT: EXIT_OK,
    DECISION_REJECT: EXIT_REJECT,
    DECISION_DEFER: EXIT_DEFER,
}

CONFIG_ENV = "PROOFBENCH_CONFIG"
DEFAULT_AUDIT_LOG = "proofbench-audit.log"
DEFAULT_VERIFY_PRIOR = 0.5


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _packaged(name: str) -> str:
    ref = importlib.resources.files("proofbench").joinpath(f"data/{name}")
    with importlib.resources.as_file(ref) as path:
        return str(path)


def _config_path(args, packaged_name: str) -> str:
    if args.config:
        return args.config
    env = os.environ.get(CONFIG_ENV)
    if env:
        return env
    return _packaged(packaged_name)


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _run_manifest(args, command: str, config_path: str, seed: int,
                  inputs, outputs) -> RunManifest:
    return RunManifest(
        command=command,
        config_hash=config_digest(config_path),
        seed=seed,
        tool_version=__version__,
        timestamp=int(getattr(args, "now", None) or time.time()),
        inputs=tuple(str(p) for p in inputs),
        outputs=tuple(str(p) for p in outputs),
    )


def _read_watermark_scores(path) -> tuple[WatermarkScore, ...]:
    payload = _load_json(path)
    if payload.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ValueError(f"unsupported scores format_version "
                         f"{payload.get('format_version')!r}")
    return tuple(WatermarkScore.from_dict(entry)
                 for entry in payload.get("watermark_scores", ()))


def cmd_verify(args) -> int:
    config_path = _config_path(args, "regimes.json")
    profiles = load_regime_profiles(config_path)
    if args.regime not in profiles:
        raise ValueError(f"unknown regime {args.regime!r}; "
                         f"known: {sorted(profiles)}")
    profile = profiles[args.regime]
    trust = load_trust_store(args.trust_store)
    with open(args.artifact, "rb") as fh:
        payload = fh.read()
    manifest_bytes = None
    if args.manifest:
        with open(args.manifest, "rb") as fh:
            manifest_bytes = fh.read()
    attestation_bytes = None
    if args.attestation:
        with open(args.attestation, "rb") as fh:
            attestation_bytes = fh.read()
    scores = _read_watermark_scores(args.scores) if args.scores else ()

    now = args.now if args.now is not None else int(time.time())
    prov_score, prov_status = verify_provenance(manifest_bytes, payload,
                                                trust, now)
    att_score, att_status = verify_attestation(attestation_bytes, payload,
                                               trust, now)
    components = ComponentScores(
        provenance=None if manifest_bytes is None else float(prov_score),
        # Strongest detector vote fills the watermark slot; individual
        # scores stay visible in the proof object.
        watermark=max((s.unit for s in scores), default=None),
        attestation=None if attestation_bytes is None else float(att_score),
    )
    proof = ProofObject(
        payload_digest=hashlib.sha256(payload).hexdigest(),
        manifest=manifest_bytes,
        watermark_scores=scores,
        attestation=attestation_bytes,
    )
    prior = DEFAULT_VERIFY_PRIOR if args.prior is None else args.prior
    verdict = decide(components, profile, proof.proof_hash(), now,
                     prior=prior)
    verdict = dataclasses.replace(verdict, diagnostics={
        **verdict.diagnostics,
        "provenance_status": prov_status,
        "attestation_status": att_status,
        "prior_source": "flag" if args.prior is not None else
                        f"default {DEFAULT_VERIFY_PRIOR}",
    })
    run = _run_manifest(args, "verify", config_path, 0,
                        inputs=[args.artifact],
                        outputs=[args.audit_log])
    append_audit(args.audit_log, {
        "run": run.to_dict(),
        "regime": args.regime,
        "decision": verdict.decision,
        "proof_hash": verdict.proof_hash,
        "provenance_status": prov_status,
        "attestation_status": att_status,
    })
    print(verdict.to_json())
    return DECISION_EXIT[verdict.decision]


def cmd_simulate(args) -> int:
    config_path = _config_path(args, "detectors.json")
    specs, fusion = load_detector_suite(config_path)
    cfg = BenchmarkConfig(seed=args.seed, n_per_tier=args.n_per_tier,
                          n_natural=args.n_natural)
    run = generate_benchmark(cfg, specs, fusion)
    os.makedirs(args.out, exist_ok=True)
    records_path = os.path.join(args.out, "records.jsonl")
    summary_path = os.path.join(args.out, "summary.json")
    n = write_records(records_path, run.records)
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(run.summary.to_dict()))
        fh.write("\n")
    manifest_path = os.path.join(args.out, "run_manifest.json")
    write_run_manifest(manifest_path, _run_manifest(
        args, "simulate", config_path, args.seed,
        inputs=[config_path], outputs=[records_path, summary_path]))
    for warning in run.summary.warnings:
        print(f"note: {warning}", file=sys.stderr)
    print(f"wrote {n} records to {records_path}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    config_path = _config_path(args, "regimes.json")
    profiles = load_regime_profiles(config_path)
    records = list(read_records(args.records))
    tagged = [r for r in records if r.partition is not None]
    if tagged and len(tagged) != len(records):
        raise ValueError("records are partially partition-tagged; supply "
                         "either a fully tagged stream or a raw one")
    if tagged:
        cal = [r for r in records if r.partition == PARTITION_CALIBRATION]
        out_records = records
    else:
        cal, test = partition(records, ratio=args.ratio, seed=args.seed)
        out_records = cal + test
    results = calibrate_all(cal, resolution=args.resolution,
                            profiles=profiles, seed=args.seed)

    os.makedirs(args.out, exist_ok=True)
    tagged_path = os.path.join(args.out, "tagged_records.jsonl")
    write_records(tagged_path, out_records)
    calibration_path = os.path.join(args.out, "calibration.json")
    with open(calibration_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json({
            "format_version": FORMAT_VERSION,
            "partition": {"ratio": args.ratio, "seed": args.seed},
            "results": {rid: r.to_dict() for rid, r in sorted(results.items())},
        }))
        fh.write("\n")
    rows = weight_table(results, profiles)
    summary_path = os.path.join(args.out, "weights_summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(render_text("regime_weights", rows))
    write_run_manifest(os.path.join(args.out, "run_manifest.json"),
                       _run_manifest(args, "calibrate", config_path,
                                     args.seed, inputs=[args.records],
                                     outputs=[tagged_path, calibration_path,
                                              summary_path]))
    for row in rows:
        print(f"{row['regime']}: weights {row['weights']} "
              f"regret {row['regret']:.6f}")
    return EXIT_OK


def _load_calibration(path) -> dict[str, CalibrationResult]:
    payload = _load_json(path)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported calibration format_version "
                         f"{payload.get('format_version')!r}")
    return {rid: CalibrationResult.from_dict(d)
            for rid, d in payload["results"].items()}


def cmd_evaluate(args) -> int:
    config_path = _config_path(args, "detectors.json")
    specs, fusion = load_detector_suite(config_path)
    records = list(read_records(args.records))
    calibration = _load_calibration(args.weights)
    summary = _load_json(args.summary)
    if summary.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported summary format_version "
                         f"{summary.get('format_version')!r}")

    reservoir = build_reservoir(specs, fusion, int(summary["seed"]),
                                int(summary["reservoir_size"]),
                                float(summary["target_fpr"]))
    stored = summary["scheme_thresholds"]
    for scheme, th in reservoir.thresholds.items():
        if abs(stored.get(scheme, float("nan")) - th) > 1e-9:
            raise ValueError(
                f"threshold mismatch for {scheme}: records were generated "
                f"against a different detector config or seed")
    if abs(float(summary["tau_combined"]) - reservoir.tau_combined) > 1e-9:
        raise ValueError("combined threshold mismatch against the rebuilt "
                         "null reservoir")

    # The attestation spec's tier rates are conditional on pipeline
    # survival, not unconditional row targets, so that row gets none.
    targets = {sid: dict(spec.tier_tpr) for sid, spec in specs.items()
               if spec.kind != KIND_REFERENCE and sid != ATTESTATION_SCHEME}
    reference = specs[fusion.derive_attestation_from]
    targets["combined"] = dict(reference.tier_tpr)

    seed = args.seed if args.seed is not None else int(summary["seed"])
    cfg = ReportConfig(seed=seed, resamples=args.resamples)
    bundle = build_reports(
        records, calibration,
        thresholds=dict(reservoir.thresholds),
        tau_combined=reservoir.tau_combined,
        weights=tuple(float(w) for w in summary["weights"]),
        watermark_scheme=summary["watermark_scheme"],
        targets=targets,
        gauss_nulls=reservoir.gauss_nulls,
        combined_null=reservoir.combined_null,
        cfg=cfg,
    )
    bundle = write_bundle(bundle, args.out)
    write_run_manifest(os.path.join(args.out, "run_manifest.json"),
                       _run_manifest(args, "evaluate", config_path, seed,
                                     inputs=[args.records, args.weights,
                                             args.summary],
                                     outputs=list(bundle.paths)))
    print(f"wrote report bundle to {args.out} "
          f"({len(bundle.tables)} tables)")
    return EXIT_OK


_DETECTION_SCHEMES = ("c2pa", "combined", "gaussian-shading",
                      "stable-signature", "tree-ring")


def cmd_report(args) -> int:
    missing = []
    for name in TABLE_NAMES:
        path = os.path.join(args.bundle, f"{name}.jsonl")
        if not os.path.exists(path):
            missing.append(f"{name}: file absent")
            continue
        rows = load_table(path)
        if not rows:
            missing.append(f"{name}: empty")
            continue
        if name == TABLE_DETECTION:
            cells = {(r["scheme"], r["tier"]) for r in rows}
            for scheme in _DETECTION_SCHEMES:
                for tier in range(5):
                    if (scheme, tier) not in cells:
                        missing.append(f"{name}: cell ({scheme}, {tier})")
        if name == TABLE_EFFECTS:
            tiers = {r["tier"] for r in rows}
            for tier in range(5):
                if tier not in tiers:
                    missing.append(f"{name}: tier {tier}")
        text_path = os.path.join(args.bundle, f"{name}.txt")
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(render_text(name, rows))
    if missing:
        for item in missing:
            print(f"missing: {item}", file=sys.stderr)
        return EXIT_DATA
    print(f"report bundle complete: {len(TABLE_NAMES)} tables rendered")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="proofbench",
                     description="provenance verification and regime-aware "
                                 "decision benchmarking")
    parser.add_argument("--version", action="version",
                        version=f"proofbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="decide one artifact's proof object")
    p.add_argument("artifact", help="path to the artifact payload bytes")
    p.add_argument("--regime", required=True)
    p.add_argument("--trust-store", required=True)
    p.add_argument("--manifest", help="provenance manifest bytes")
    p.add_argument("--attestation", help="attestation statement bytes")
    p.add_argument("--scores", help="watermark detector scores JSON")
    p.add_argument("--prior", type=float, default=None,
                   help=f"base rate for the posterior branch "
                        f"(default {DEFAULT_VERIFY_PRIOR}, printed)")
    p.add_argument("--config", help="regime profiles JSON")
    p.add_argument("--now", type=int, default=None,
                   help="verification time (epoch seconds; default wall clock)")
    p.add_argument("--audit-log", default=DEFAULT_AUDIT_LOG)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="generate the synthetic benchmark")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-per-tier", type=int, default=2000)
    p.add_argument("--n-natural", type=int, default=2000)
    p.add_argument("--config", help="detector suite JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit regime weights on the "
                                         "calibration partition")
    p.add_argument("--records", required=True)
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION)
    p.add_argument("--ratio", type=float, default=DEFAULT_PARTITION_RATIO)
    p.add_argument("--seed", type=int, default=DEFAULT_PARTITION_SEED)
    p.add_argument("--config", help="regime profiles JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="score the test partition into a "
                                        "report bundle")
    p.add_argument("--records", required=True, help="tagged records JSONL")
    p.add_argument("--weights", required=True, help="calibration.json")
    p.add_argument("--summary", required=True, help="benchmark summary JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="report seed (default: benchmark seed)")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--config", help="detector suite JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="validate and re-render a bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"proofbench: cannot read input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError, ManifestParseError,
            json.JSONDecodeError) as exc:
        print(f"proofbench: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # pragma: no cover - last-resort diagnostics
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
