"""Evidence fusion and the three-branch decision procedure.

Component scores from provenance, watermark, and attestation checks are
fused with a weighted noisy-OR; the fused score is converted to a
likelihood ratio and, where a branch needs it, a posterior.  Each legal
regime compares one of those statistics against its threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    BRANCH_DOMESTIC,
    BRANCH_OPLAW,
    BRANCH_PRODUCT,
    DECISION_ACCEPT,
    DECISION_DEFER,
    DECISION_REJECT,
    RegimeProfile,
    Verdict,
)

# Saturation for the likelihood ratio as the fused score approaches 1.
# L/(1-L) is monotone, so capping preserves every threshold comparison
# with lambda_min values anywhere below the sentinel.
LIKELIHOOD_RATIO_MAX = 1e12


@dataclass(frozen=True)
class ComponentScores:
    """Unit-interval evidence per component.

    None marks an absent component (no manifest supplied, no watermark
    detector report, no attestation statement).  Absent components
    contribute zero evidence, which makes the provenance-only cold-start
    path a special case rather than a separate code path.
    """

    provenance: float | None = None
    watermark: float | None = None
    attestation: float | None = None

    def __post_init__(self):
        for name, value in self.as_mapping().items():
            if value is None:
                continue
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} score must lie in [0, 1], "
                                 f"got {value!r}")

    def as_mapping(self) -> dict[str, float | None]:
        return {"provenance": self.provenance, "watermark": self.watermark,
                "attestation": self.attestation}

    def effective(self) -> tuple[float, float, float]:
        return (self.provenance or 0.0, self.watermark or 0.0,
                self.attestation or 0.0)

    def absent(self) -> tuple[str, ...]:
        return tuple(name for name, value in self.as_mapping().items()
                     if value is None)


def ds_combine(weights, scores) -> float:
    """Weighted noisy-OR fusion: 1 - prod_i (1 - w_i * s_i).

    Any single strong, heavily weighted component can push the result
    high; weak components only ever add.  The reachable maximum is
    1 - prod(1 - w_i), which callers surface as the fusion ceiling.
    """
    if len(weights) != len(scores):
        raise ValueError("weights and scores must have the same length")
    remainder = 1.0
    for w, s in zip(weights, scores):
        if not (0.0 <= w <= 1.0):
            raise ValueError(f"weight must lie in [0, 1], got {w!r}")
        if not (0.0 <= s <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {s!r}")
        remainder *= 1.0 - w * s
    return 1.0 - remainder


def likelihood_ratio(combined: float) -> float:
    """Convert a fused score to a likelihood ratio L / (1 - L).

    Saturates at LIKELIHOOD_RATIO_MAX instead of raising near L = 1; the
    cap keeps verdict serialization finite and is far above every
    shipped lambda_min.
    """
    if not (0.0 <= combined <= 1.0):
        raise ValueError(f"combined score must lie in [0, 1], got {combined!r}")
    if combined >= 1.0:
        return LIKELIHOOD_RATIO_MAX
    ratio = combined / (1.0 - combined)
    return min(ratio, LIKELIHOOD_RATIO_MAX)


def bayes_posterior(ratio: float, prior: float) -> float:
    """Posterior for the verified-provenance hypothesis given a likelihood
    ratio and a prior base rate."""
    if ratio < 0:
        raise ValueError(f"likelihood ratio must be >= 0, got {ratio!r}")
    if not (0.0 < prior < 1.0):
        raise ValueError(f"prior must lie in (0, 1), got {prior!r}")
    numerator = ratio * prior
    return numerator / (numerator + (1.0 - prior))


def accept_threshold(profile: RegimeProfile, prior: float | None = None) -> float:
    """The acceptance condition of every branch, restated as a bound on
    the fused score.

    oplaw:    posterior >= tau  <=>  L >= t  (prior-dependent)
    domestic: ratio >= lambda_min  <=>  L >= lambda_min / (1 + lambda_min)
    product:  L >= tau directly

    The transforms are strictly monotone, so the restated bound matches
    the branch comparison exactly, boundary included.
    """
    if profile.branch == BRANCH_OPLAW:
        p = profile.prior if prior is None else prior
        if not (0.0 < p < 1.0):
            raise ValueError(f"prior must lie in (0, 1), got {p!r}")
        ratio_bound = profile.tau * (1.0 - p) / ((1.0 - profile.tau) * p)
        return ratio_bound / (1.0 + ratio_bound)
    if profile.branch == BRANCH_DOMESTIC:
        return profile.lambda_min / (1.0 + profile.lambda_min)
    if profile.branch == BRANCH_PRODUCT:
        return profile.tau
    raise ValueError(f"unknown branch {profile.branch!r}")


def decide(components: ComponentScores, profile: RegimeProfile,
           proof_hash: str, timestamp: int,
           prior: float | None = None) -> Verdict:
    """Render a verdict for one artifact under one regime profile.

    oplaw accepts on posterior >= tau and otherwise defers for human
    review; domestic accepts on ratio >= lambda_min and otherwise rejects;
    product accepts on fused score >= tau and otherwise rejects.  The
    boundary always accepts.  prior overrides the profile prior on the
    oplaw branch and is ignored elsewhere.
    """
    scores = components.effective()
    combined = ds_combine(profile.weights, scores)
    ratio = likelihood_ratio(combined)
    ceiling = profile.ceiling()
    threshold = accept_threshold(profile, prior)

    diagnostics: dict[str, object] = {
        "component_scores": {k: v for k, v in components.as_mapping().items()},
        "absent_components": list(components.absent()),
        "weights": list(profile.weights),
        "fusion_ceiling": ceiling,
        "accept_threshold_combined": threshold,
        # An unreachable threshold means this profile can never accept,
        # whatever the evidence; surfaced so operators see it.
        "threshold_reachable": ceiling >= threshold,
        "likelihood_saturated": ratio >= LIKELIHOOD_RATIO_MAX,
    }

    if profile.branch == BRANCH_OPLAW:
        effective_prior = profile.prior if prior is None else prior
        posterior = bayes_posterior(ratio, effective_prior)
        decision = DECISION_ACCEPT if posterior >= profile.tau else DECISION_DEFER
        statistic_name, statistic = "posterior", posterior
        diagnostics["prior"] = effective_prior
        diagnostics["tau"] = profile.tau
    elif profile.branch == BRANCH_DOMESTIC:
        decision = (DECISION_ACCEPT if ratio >= profile.lambda_min
                    else DECISION_REJECT)
        statistic_name, statistic = "likelihood_ratio", ratio
        diagnostics["lambda_min"] = profile.lambda_min
    elif profile.branch == BRANCH_PRODUCT:
        decision = DECISION_ACCEPT if combined >= profile.tau else DECISION_REJECT
        statistic_name, statistic = "combined_score", combined
        diagnostics["tau"] = profile.tau
    else:  # pragma: no cover - RegimeProfile validates the branch
        raise ValueError(f"unknown branch {profile.branch!r}")

    return Verdict(
        decision=decision,
        regime=profile.regime,
        combined_score=combined,
        statistic_name=statistic_name,
        statistic=statistic,
        proof_hash=proof_hash,
        timestamp=timestamp,
        diagnostics=diagnostics,
    )
