"""Generative property suites for fusion algebra, effect sizes, ranking,
and the calibration partition.

Each of the six core suites runs at least 1000 generated cases; the
acceptance gate checks that floor by inspecting the hypothesis settings
attached to these functions, so keep the names and CASES constant stable.
"""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from proofbench.calibration import enumerate_simplex, partition, simplex_cardinality
from proofbench.core import MODALITIES, TRUTH_MARKED, TRUTH_NATURAL, ScoreRecord
from proofbench.detectors import roc_auc
from proofbench.fusion import bayes_posterior, ds_combine, likelihood_ratio
from proofbench.stats import bonferroni, cliffs_delta, holm

CASES = 1000

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)

# Mix a coarse integer lattice into the float stream so tied values are
# common; pure float generation almost never collides.
tie_prone = st.one_of(
    st.integers(min_value=-3, max_value=3).map(float),
    st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
)


@st.composite
def simplex_weights(draw):
    """Uniform-ish point on the 3-weight simplex via two cuts of [0, 1]."""
    a = draw(unit)
    b = draw(unit)
    lo, hi = min(a, b), max(a, b)
    return (lo, hi - lo, 1.0 - hi)


@st.composite
def item_record_sets(draw):
    """2..40 items, 1..3 laundered variants each, mixed labels."""
    n_items = draw(st.integers(min_value=2, max_value=40))
    records = []
    for i in range(n_items):
        for v in range(draw(st.integers(min_value=1, max_value=3))):
            records.append(ScoreRecord(
                item_id=f"item-{i:03d}",
                modality=MODALITIES[i % len(MODALITIES)],
                generator="gen-a",
                tier=v,
                truth=TRUTH_MARKED if i % 2 else TRUTH_NATURAL,
                raw_scores={},
                unit_scores={},
            ))
    return records


@settings(max_examples=CASES, deadline=None)
@given(weights=simplex_weights(), scores=st.tuples(unit, unit, unit),
       index=st.integers(min_value=0, max_value=2), other=unit)
def test_combiner_monotone_in_each_score(weights, scores, index, other):
    lower = list(scores)
    higher = list(scores)
    lower[index] = min(scores[index], other)
    higher[index] = max(scores[index], other)
    assert ds_combine(weights, higher) >= ds_combine(weights, lower) - 1e-12


@settings(max_examples=CASES, deadline=None)
@given(weights=simplex_weights(), scores=st.tuples(unit, unit, unit))
def test_combined_score_never_exceeds_ceiling(weights, scores):
    ceiling = 1.0 - math.prod(1.0 - w for w in weights)
    assert 0.0 <= ds_combine(weights, scores) <= ceiling + 1e-12
    # The ceiling is attained exactly when every source saturates.
    assert abs(ds_combine(weights, (1.0, 1.0, 1.0)) - ceiling) <= 1e-12


@settings(max_examples=CASES, deadline=None)
@given(combined=unit)
def test_even_prior_posterior_equals_combined_score(combined):
    posterior = bayes_posterior(likelihood_ratio(combined), 0.5)
    # Holds through the ratio cap: at combined = 1 the capped ratio still
    # places the posterior within 1e-12 of 1.
    assert abs(posterior - combined) <= 1e-12


@settings(max_examples=CASES, deadline=None)
@given(x=st.lists(tie_prone, min_size=1, max_size=200),
       y=st.lists(tie_prone, min_size=1, max_size=200))
def test_cliffs_delta_antisymmetry_and_brute_force(x, y):
    forward = cliffs_delta(x, y, cfg=None).delta
    backward = cliffs_delta(y, x, cfg=None).delta
    # Integer pair counts over a shared denominator: exact, not approximate.
    assert forward == -backward
    xs = np.asarray(x, dtype=float)[:, None]
    ys = np.asarray(y, dtype=float)[None, :]
    brute = (int((xs > ys).sum()) - int((xs < ys).sum())) / (len(x) * len(y))
    assert forward == brute


@settings(max_examples=CASES, deadline=None)
@given(pos=st.lists(tie_prone, min_size=1, max_size=120),
       nulls=st.lists(tie_prone, min_size=1, max_size=120))
def test_roc_auc_matches_pairwise_counting(pos, nulls):
    xs = np.asarray(pos, dtype=float)[:, None]
    ys = np.asarray(nulls, dtype=float)[None, :]
    wins = int((xs > ys).sum())
    ties = int((xs == ys).sum())
    expected = (wins + 0.5 * ties) / (len(pos) * len(nulls))
    assert abs(roc_auc(pos, nulls) - expected) <= 1e-9


@settings(max_examples=CASES, deadline=None)
@given(records=item_record_sets(),
       ratio=st.floats(min_value=0.05, max_value=0.95),
       seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_partition_is_a_clean_item_level_split(records, ratio, seed):
    cal, test = partition(records, ratio=ratio, seed=seed)
    assert len(cal) + len(test) == len(records)
    cal_items = {r.item_id for r in cal}
    test_items = {r.item_id for r in test}
    assert cal_items and test_items
    assert cal_items.isdisjoint(test_items)
    assert all(r.partition == "calibration" for r in cal)
    assert all(r.partition == "test" for r in test)

    def key(r):
        return (r.item_id, r.tier, r.truth, r.modality)

    # Nothing dropped, nothing duplicated; only the tag changes.
    assert sorted(map(key, cal + test)) == sorted(map(key, records))


@settings(max_examples=CASES, deadline=None)
@given(k=st.integers(min_value=1, max_value=40))
def test_simplex_cardinality_matches_enumeration(k):
    resolution = 1.0 / k
    grid = enumerate_simplex(resolution)
    assert len(grid) == simplex_cardinality(resolution) == (k + 1) * (k + 2) // 2
    assert len(set(grid)) == len(grid)


@settings(max_examples=CASES, deadline=None)
@given(ps=st.lists(unit, min_size=1, max_size=8))
def test_holm_bounded_by_bonferroni(ps):
    adjusted = holm(ps)
    for raw, adj in zip(ps, adjusted):
        assert raw - 1e-12 <= adj <= bonferroni(raw, len(ps)) + 1e-12
    # Step-down must preserve the significance ordering.
    order = sorted(range(len(ps)), key=lambda i: ps[i])
    for earlier, later in zip(order, order[1:]):
        assert adjusted[earlier] <= adjusted[later] + 1e-12
