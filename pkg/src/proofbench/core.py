"""Core data model: proof objects, laundering descriptors, regime profiles,
score records, and verdicts.

Everything downstream (manifest checks, score fusion, calibration, reports)
speaks in these types.  Serialization is canonical JSON: keys sorted, no
whitespace, ASCII only, NaN rejected.  Hashes of canonical bytes are stable
across platforms and runs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

FORMAT_VERSION = 1

DECISION_ACCEPT = "ACCEPT"
DECISION_REJECT = "REJECT"
DECISION_DEFER = "DEFER"
DECISIONS = (DECISION_ACCEPT, DECISION_REJECT, DECISION_DEFER)

TRUTH_MARKED = "synthetic-marked"
TRUTH_NATURAL = "natural"
TRUTHS = (TRUTH_MARKED, TRUTH_NATURAL)

# Cost matrices speak in content-truth terms; benchmark record labels map
# onto them one-to-one.
COST_AUTHENTIC = "authentic"
COST_SYNTHETIC = "synthetic"
COST_TRUTHS = (COST_AUTHENTIC, COST_SYNTHETIC)
RECORD_TRUTH_TO_COST: Mapping[str, str] = {
    TRUTH_NATURAL: COST_AUTHENTIC,
    TRUTH_MARKED: COST_SYNTHETIC,
}

MODALITIES = ("image", "audio", "video")

COMPONENT_PROVENANCE = "provenance"
COMPONENT_WATERMARK = "watermark"
COMPONENT_ATTESTATION = "attestation"
COMPONENTS = (COMPONENT_PROVENANCE, COMPONENT_WATERMARK, COMPONENT_ATTESTATION)

BRANCH_OPLAW = "oplaw"
BRANCH_DOMESTIC = "domestic"
BRANCH_PRODUCT = "product"

# Transform pipelines and the adversary tier each one lands in.  P1/P2 are
# recompression-and-resize laundering, P3 regenerates through a different
# model, P4/P5 attack the embedded mark directly, P6 strips and re-encodes.
PIPELINE_TIERS: Mapping[str, int] = {
    "P1": 2,
    "P2": 2,
    "P3": 3,
    "P4": 4,
    "P5": 4,
    "P6": 4,
}

TIER_MIN = 0
TIER_MAX = 5

TIER_LABELS: Mapping[int, str] = {
    0: "unmodified",
    1: "same-model resample",
    2: "laundering",
    3: "cross-model regeneration",
    4: "active removal",
    5: "insider key compromise",
}

# Tier 5 is a key-management failure, not a signal-level attack; it is
# excluded from every quantitative path and exists only for classification.
QUANTITATIVE_TIERS = (0, 1, 2, 3, 4)


def canonical_json(obj) -> str:
    """Deterministic text encoding used for hashing and audit records."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True, allow_nan=False)


def canonical_digest(obj) -> str:
    """SHA-256 hex digest of the canonical encoding."""
    return hashlib.sha256(canonical_json(obj).encode("ascii")).hexdigest()


def classify_tier(pipeline: str) -> int:
    """Map a transform pipeline id to its adversary tier.

    Unknown pipeline ids are a hard input error, never a silent default.
    """
    try:
        return PIPELINE_TIERS[pipeline]
    except KeyError:
        raise ValueError(f"unknown transform pipeline {pipeline!r}; "
                         f"known: {sorted(PIPELINE_TIERS)}") from None


def _check_unit(name: str, value: float) -> None:
    # NaN fails both comparisons, so it is rejected here too.
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class LaunderingDescriptor:
    """Transform history of an artifact.

    tier 0 means untouched, so the transform log must be empty.  When a
    pipeline id is present its tier mapping must agree with the stored tier.
    """

    tier: int
    pipeline: str | None = None
    transforms: tuple[str, ...] = ()

    def __post_init__(self):
        if not (TIER_MIN <= self.tier <= TIER_MAX):
            raise ValueError(f"tier must be in [{TIER_MIN}, {TIER_MAX}], "
                             f"got {self.tier}")
        if self.tier == 0 and self.transforms:
            raise ValueError("tier 0 artifacts cannot carry a transform log")
        if self.pipeline is not None and classify_tier(self.pipeline) != self.tier:
            raise ValueError(
                f"pipeline {self.pipeline} maps to tier "
                f"{classify_tier(self.pipeline)}, not {self.tier}")

    def to_dict(self) -> dict:
        return {"tier": self.tier, "pipeline": self.pipeline,
                "transforms": list(self.transforms)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LaunderingDescriptor":
        return cls(tier=int(d["tier"]), pipeline=d.get("pipeline"),
                   transforms=tuple(d.get("transforms", ())))


@dataclass(frozen=True)
class WatermarkScore:
    """One watermark detector's output for an artifact: raw statistic plus
    its unit-interval normalization against the detector's null."""

    scheme: str
    raw: float
    unit: float

    def __post_init__(self):
        if not self.scheme:
            raise ValueError("scheme id must be non-empty")
        if self.raw != self.raw:  # NaN guard; raw is otherwise unconstrained
            raise ValueError("raw score must not be NaN")
        _check_unit("unit score", self.unit)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "raw": self.raw, "unit": self.unit}

    @classmethod
    def from_dict(cls, d: Mapping) -> "WatermarkScore":
        return cls(scheme=d["scheme"], raw=float(d["raw"]),
                   unit=float(d["unit"]))


@dataclass(frozen=True)
class ProofObject:
    """Everything a verifier may present about one artifact.

    The manifest and attestation statement are kept as opaque bytes here;
    parsing and cryptographic checking live in the manifest module.  At
    least one evidence component must be present, otherwise there is
    nothing to decide on.
    """

    payload_digest: str
    manifest: bytes | None = None
    watermark_scores: tuple[WatermarkScore, ...] = ()
    attestation: bytes | None = None
    laundering: LaunderingDescriptor = field(
        default_factory=lambda: LaunderingDescriptor(tier=0))

    def __post_init__(self):
        if not self.payload_digest:
            raise ValueError("payload digest must be non-empty")
        if (self.manifest is None and not self.watermark_scores
                and self.attestation is None):
            raise ValueError("proof object must carry at least one evidence "
                             "component (manifest, watermark, attestation)")

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "payload_digest": self.payload_digest,
            "manifest": self.manifest.hex() if self.manifest is not None else None,
            "watermark_scores": [w.to_dict() for w in self.watermark_scores],
            "attestation": (self.attestation.hex()
                            if self.attestation is not None else None),
            "laundering": self.laundering.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProofObject":
        if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise ValueError(f"unsupported proof object format_version "
                             f"{d.get('format_version')!r}")
        return cls(
            payload_digest=d["payload_digest"],
            manifest=bytes.fromhex(d["manifest"]) if d.get("manifest") else None,
            watermark_scores=tuple(WatermarkScore.from_dict(w)
                                   for w in d.get("watermark_scores", ())),
            attestation=(bytes.fromhex(d["attestation"])
                         if d.get("attestation") else None),
            laundering=LaunderingDescriptor.from_dict(d["laundering"]),
        )

    def proof_hash(self) -> str:
        return canonical_digest(self.to_dict())


@dataclass(frozen=True)
class CostMatrix:
    """Decision costs per (decision, content truth); correct decisions are
    free in the shipped defaults.

    ACCEPT here means accepting the proof that content is synthetic, so
    accepting authentic content is the false positive every regime prices
    hardest, and failing to credit a valid proof (DEFER or REJECT on
    synthetic content) is the cheaper miss.
    """

    accept_authentic: float = 0.0
    accept_synthetic: float = 0.0
    reject_authentic: float = 0.0
    reject_synthetic: float = 0.0
    defer_authentic: float = 0.0
    defer_synthetic: float = 0.0

    def __post_init__(self):
        for name, value in self.to_flat().items():
            if not isinstance(value, (int, float)) or math.isnan(value) \
                    or math.isinf(value) or value < 0:
                raise ValueError(f"cost {name} must be finite and >= 0, "
                                 f"got {value!r}")

    def cost(self, decision: str, truth: str) -> float:
        if decision not in DECISIONS:
            raise ValueError(f"unknown decision {decision!r}")
        if truth not in COST_TRUTHS:
            raise ValueError(f"unknown cost truth {truth!r}")
        return self.to_flat()[f"{decision.lower()}_{truth}"]

    def to_flat(self) -> dict[str, float]:
        return {
            "accept_authentic": self.accept_authentic,
            "accept_synthetic": self.accept_synthetic,
            "reject_authentic": self.reject_authentic,
            "reject_synthetic": self.reject_synthetic,
            "defer_authentic": self.defer_authentic,
            "defer_synthetic": self.defer_synthetic,
        }

    def to_dict(self) -> dict:
        return {d: {t: self.cost(d, t) for t in COST_TRUTHS}
                for d in DECISIONS}

    def scaled(self, factor: float) -> "CostMatrix":
        return CostMatrix(**{k: v * factor for k, v in self.to_flat().items()})

    @classmethod
    def from_dict(cls, d: Mapping) -> "CostMatrix":
        kwargs = {}
        for decision in DECISIONS:
            row = d.get(decision, {})
            for truth in COST_TRUTHS:
                kwargs[f"{decision.lower()}_{truth}"] = float(row.get(truth, 0.0))
        return cls(**kwargs)


@dataclass(frozen=True)
class RegimeProfile:
    """Decision parameters for one legal regime.

    weights are (provenance, watermark, attestation) on the 3-simplex.
    tau is the acceptance threshold: a posterior bound on the oplaw branch,
    a direct combined-score bound on the product branch.  lambda_min is the
    likelihood-ratio floor used only by the domestic branch.  prior is the
    base rate presumed for posterior computation; decision paths that do
    not consult a posterior ignore it.  cost prices wrong decisions for
    weight calibration; decision paths never read it.
    """

    regime: str
    branch: str
    weights: tuple[float, float, float]
    tau: float
    lambda_min: float | None = None
    prior: float = 0.5
    cost: CostMatrix | None = None

    def __post_init__(self):
        if self.branch not in (BRANCH_OPLAW, BRANCH_DOMESTIC, BRANCH_PRODUCT):
            raise ValueError(f"unknown branch {self.branch!r}")
        if len(self.weights) != 3:
            raise ValueError("weights must have exactly three components")
        for w in self.weights:
            _check_unit("weight", w)
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        if self.branch == BRANCH_DOMESTIC:
            if self.lambda_min is None or self.lambda_min <= 0:
                raise ValueError("domestic branch requires lambda_min > 0")
        if not (0.0 < self.prior < 1.0):
            raise ValueError(f"prior must lie in (0, 1), got {self.prior!r}")

    def ceiling(self) -> float:
        """Largest combined score these weights can produce.

        The noisy-OR fusion caps at 1 - prod(1 - w_i); with small weights
        some branch thresholds are unreachable, so the decision procedure
        reports this alongside every verdict.
        """
        p = 1.0
        for w in self.weights:
            p *= 1.0 - w
        return 1.0 - p

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "branch": self.branch,
            "weights": list(self.weights),
            "tau": self.tau,
            "lambda_min": self.lambda_min,
            "prior": self.prior,
            "cost": self.cost.to_dict() if self.cost is not None else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RegimeProfile":
        return cls(
            regime=d["regime"],
            branch=d["branch"],
            weights=tuple(float(w) for w in d["weights"]),
            tau=float(d["tau"]),
            lambda_min=(float(d["lambda_min"])
                        if d.get("lambda_min") is not None else None),
            prior=float(d.get("prior", 0.5)),
            cost=(CostMatrix.from_dict(d["cost"])
                  if d.get("cost") is not None else None),
        )


def regime_defaults() -> dict[str, RegimeProfile]:
    """Shipped baseline profiles.

    Weights are the published per-regime calibration results; tau and
    lambda_min are the published regime thresholds.  The oplaw priors are
    the calibration convention shipped with this package (provenance-enabled
    feeds presumed); verify-time posterior computation takes the prior from
    an explicit flag instead.  Cost matrices are package defaults ordered
    by each regime's harm asymmetry: kinetic regimes price a false accept
    of authentic content at 10x/5x/2x a deferred valid proof, the domestic
    branch is symmetric, and the product branch prices an uncredited mark
    at 3x a false accept.
    """
    return {
        "oplaw-populated": RegimeProfile(
            regime="oplaw-populated", branch=BRANCH_OPLAW,
            weights=(0.55, 0.25, 0.20), tau=0.95, prior=0.97,
            cost=CostMatrix(accept_authentic=10.0, defer_synthetic=1.0,
                            reject_synthetic=1.0)),
        "oplaw-uninhabited": RegimeProfile(
            regime="oplaw-uninhabited", branch=BRANCH_OPLAW,
            weights=(0.50, 0.30, 0.20), tau=0.85, prior=0.90,
            cost=CostMatrix(accept_authentic=5.0, defer_synthetic=1.0,
                            reject_synthetic=1.0)),
        "oplaw-nonkinetic": RegimeProfile(
            regime="oplaw-nonkinetic", branch=BRANCH_OPLAW,
            weights=(0.45, 0.35, 0.20), tau=0.70, prior=0.80,
            cost=CostMatrix(accept_authentic=2.0, defer_synthetic=1.0,
                            reject_synthetic=1.0)),
        "domestic": RegimeProfile(
            regime="domestic", branch=BRANCH_DOMESTIC,
            weights=(0.60, 0.30, 0.10), tau=0.5, lambda_min=10.0,
            cost=CostMatrix(accept_authentic=1.0, reject_synthetic=1.0,
                            defer_synthetic=1.0)),
        "product": RegimeProfile(
            regime="product", branch=BRANCH_PRODUCT,
            weights=(0.35, 0.45, 0.20), tau=0.70,
            cost=CostMatrix(accept_authentic=1.0, reject_synthetic=3.0,
                            defer_synthetic=3.0)),
    }


REGIME_IDS = tuple(regime_defaults().keys())


def load_regime_profiles(path) -> dict[str, RegimeProfile]:
    """Read regime profiles from a JSON config file.

    Schema: {"format_version": 1, "regimes": {"<id>": {profile fields}}}.
    Field meanings match RegimeProfile; see data/regimes.json for the
    shipped baseline.
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported regimes config format_version "
                         f"{payload.get('format_version')!r}")
    profiles = {}
    for rid, spec in payload["regimes"].items():
        spec = dict(spec)
        spec.setdefault("regime", rid)
        profile = RegimeProfile.from_dict(spec)
        if profile.regime != rid:
            raise ValueError(f"profile id mismatch: key {rid!r} vs "
                             f"field {profile.regime!r}")
        profiles[rid] = profile
    return profiles


def dump_regime_profiles(profiles: Mapping[str, RegimeProfile]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "regimes": {rid: p.to_dict() for rid, p in sorted(profiles.items())},
    }


@dataclass(frozen=True)
class ScoreRecord:
    """One benchmark observation: an item at a given transform tier with
    per-scheme raw detector outputs and per-component unit scores."""

    item_id: str
    modality: str
    generator: str
    tier: int
    truth: str
    raw_scores: Mapping[str, float]
    unit_scores: Mapping[str, float]
    pipeline: str | None = None
    partition: str | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.truth not in TRUTHS:
            raise ValueError(f"unknown ground truth label {self.truth!r}")
        if self.tier not in QUANTITATIVE_TIERS:
            raise ValueError(f"score records exist only for tiers "
                             f"{QUANTITATIVE_TIERS}, got {self.tier}")
        for comp, val in self.unit_scores.items():
            if comp not in COMPONENTS:
                raise ValueError(f"unknown component {comp!r}")
            _check_unit(f"unit score for {comp}", val)
        if self.partition not in (None, "calibration", "test"):
            raise ValueError(f"unknown partition tag {self.partition!r}")

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "item_id": self.item_id,
            "modality": self.modality,
            "generator": self.generator,
            "tier": self.tier,
            "pipeline": self.pipeline,
            "truth": self.truth,
            "raw_scores": dict(sorted(self.raw_scores.items())),
            "unit_scores": dict(sorted(self.unit_scores.items())),
            "partition": self.partition,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScoreRecord":
        if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise ValueError(f"unsupported score record format_version "
                             f"{d.get('format_version')!r}")
        return cls(
            item_id=d["item_id"], modality=d["modality"],
            generator=d["generator"], tier=int(d["tier"]),
            pipeline=d.get("pipeline"), truth=d["truth"],
            raw_scores={k: float(v) for k, v in d["raw_scores"].items()},
            unit_scores={k: float(v) for k, v in d["unit_scores"].items()},
            partition=d.get("partition"),
        )


def write_records(path, records: Iterable[ScoreRecord]) -> int:
    """Write score records as JSON Lines with canonical key order.

    Returns the number of records written.
    """
    n = 0
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(canonical_json(rec.to_dict()))
            fh.write("\n")
            n += 1
    return n


def read_records(path) -> Iterator[ScoreRecord]:
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield ScoreRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad score record: {exc}") from exc


@dataclass(frozen=True)
class Verdict:
    """Decision output for one proof object under one regime.

    statistic_name says which quantity the branch compared against its
    threshold: "posterior" (oplaw), "likelihood_ratio" (domestic), or
    "combined_score" (product).  diagnostics carries the component scores,
    the effective threshold, and the fusion ceiling so unreachable
    thresholds are visible instead of silent.
    """

    decision: str
    regime: str
    combined_score: float
    statistic_name: str
    statistic: float
    proof_hash: str
    timestamp: int
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"unknown decision {self.decision!r}")
        _check_unit("combined score", self.combined_score)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "decision": self.decision,
            "regime": self.regime,
            "combined_score": self.combined_score,
            "statistic_name": self.statistic_name,
            "statistic": self.statistic,
            "proof_hash": self.proof_hash,
            "timestamp": self.timestamp,
            "diagnostics": dict(sorted(self.diagnostics.items())),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())
