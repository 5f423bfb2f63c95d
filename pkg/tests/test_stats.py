import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronon.core import ValidationError
from chronon.stats import (
    TestResult,
    TrialBatch,
    merge_batches,
    mutual_information,
    sample_detection,
    stream_generator,
    two_proportion_test,
)


def test_degenerate_probabilities():
    assert sample_detection(0.0, 1000, 1, "s").n_hits == 0
    assert sample_detection(1.0, 1000, 1, "s").n_hits == 1000


def test_sampling_rejects_bad_input():
    with pytest.raises(ValidationError):
        sample_detection(1.2, 10, 0, "s")
    with pytest.raises(ValidationError):
        sample_detection(0.5, 0, 0, "s")
    with pytest.raises(ValidationError):
        TrialBatch(10, 11)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**63), stream=st.tuples(st.text(max_size=5), st.integers(0, 99)))
def test_same_seed_and_stream_replays(seed, stream):
    a = sample_detection(0.37, 10_000, seed, stream)
    b = sample_detection(0.37, 10_000, seed, stream)
    assert a == b


def test_streams_are_distinct():
    draws = {sample_detection(0.5, 10**6, 7, ("x", k)).n_hits for k in range(20)}
    assert len(draws) > 15
    a = stream_generator(1, "a").random(4)
    b = stream_generator(1, "b").random(4)
    assert not np.array_equal(a, b)


def test_binomial_moments():
    p, n = 0.3, 10**5
    est = np.array([sample_detection(p, n, 2024, ("moments", k)).p_hat for k in range(100)])
    assert abs(est.mean() - p) <= 0.005
    assert est.var(ddof=1) == pytest.approx(p * (1 - p) / n, rel=0.2)


def test_merge_adds_counts():
    m = merge_batches([TrialBatch(10, 3), TrialBatch(5, 5), TrialBatch(1, 0)])
    assert (m.n_trials, m.n_hits) == (16, 8)


def test_batch_json_round_trip():
    b = sample_detection(0.2, 500, 9, ("protocol", "p0"))
    assert TrialBatch.from_dict(b.to_dict()) == b


def test_identical_batches_not_significant():
    a = TrialBatch(10**5, 50_000)
    r = two_proportion_test(a, a)
    assert r.z_statistic == 0 and r.p_value == 1 and not r.significant


def test_test_matches_hand_formula():
    a, b = TrialBatch(10**5, 50_000), TrialBatch(10**5, 50_500)
    pa, pb = 0.5, 0.505
    pbar = (50_000 + 50_500) / 2e5
    z = (pa - pb) / math.sqrt(pbar * (1 - pbar) * 2e-5)
    assert two_proportion_test(a, b).z_statistic == pytest.approx(z, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(
    na=st.integers(1, 10**6), nb=st.integers(1, 10**6),
    fa=st.floats(0, 1), fb=st.floats(0, 1), alpha=st.floats(1e-6, 0.5),
)
def test_antisymmetry_and_threshold(na, nb, fa, fb, alpha):
    a, b = TrialBatch(na, int(fa * na)), TrialBatch(nb, int(fb * nb))
    r, s = two_proportion_test(a, b, alpha), two_proportion_test(b, a, alpha)
    assert r.z_statistic == -s.z_statistic
    assert 0.0 <= r.p_value <= 1.0
    assert r.significant == (r.p_value < alpha)


def test_empty_batch_rejected():
    with pytest.raises(ValidationError):
        two_proportion_test(TrialBatch(0, 0), TrialBatch(5, 1))


def test_result_round_trip():
    r = two_proportion_test(TrialBatch(1000, 400), TrialBatch(1000, 480))
    assert TestResult.from_dict(r.to_dict()) == r


def _rejection_rate(p_a, p_b, n, alpha, pairs, tag):
    hits = 0
    for k in range(pairs):
        a = sample_detection(p_a, n, 11, (tag, "a", k))
        b = sample_detection(p_b, n, 11, (tag, "b", k))
        hits += two_proportion_test(a, b, alpha).significant
    return hits / pairs


def test_type_one_error_calibrated():
    rate = _rejection_rate(0.3, 0.3, 10**4, 0.01, 10**4, "null")
    assert 0.005 <= rate <= 0.02


def test_power_monotone_in_effect():
    rates = [_rejection_rate(0.3, 0.3 + d, 10**4, 0.01, 2000, f"power{d}") for d in (0.0, 0.01, 0.02)]
    assert rates[0] <= rates[1] <= rates[2]


def test_mutual_information():
    x = np.array([0, 1] * 500)
    assert mutual_information(x, x) == pytest.approx(1.0)
    assert mutual_information(x, np.zeros_like(x)) == 0.0
    with pytest.raises(ValidationError):
        mutual_information([0, 1], [1])
