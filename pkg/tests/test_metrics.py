import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechosr.metrics import (
    TrialResult,
    adjusted_rand_index,
    contingency_table,
    detection_accuracy,
    recognition_rate,
)


def brute_force_ari(a, b):
    """Pair-counting ARI: walk over every unordered pair of samples."""
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    same_a = [a[i] == a[j] for i, j in pairs]
    same_b = [b[i] == b[j] for i, j in pairs]
    both = sum(x and y for x, y in zip(same_a, same_b))
    sa, sb, total = sum(same_a), sum(same_b), len(pairs)
    expected = sa * sb / total
    max_index = (sa + sb) / 2
    if max_index == expected:
        return 1.0 if same_a == same_b else 0.0
    return (both - expected) / (max_index - expected)


labelings = st.integers(2, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )
)


def test_detection_accuracy_hand_count():
    decided = [False, False, False, True, True, True, True, False, False, False]
    truth = [False] * 4 + [True] * 6
    assert detection_accuracy(decided, truth) == pytest.approx((0.75, 0.5, 0.6))


def test_detection_accuracy_all_correct():
    assert detection_accuracy([True, False], [True, False]) == (1.0, 1.0, 1.0)


def test_detection_accuracy_missing_group_is_nan():
    known, novel, overall = detection_accuracy([False, False], [False, False])
    assert known == 1.0 and math.isnan(novel) and overall == 1.0


def test_detection_accuracy_rejects_empty_and_mismatch():
    with pytest.raises(ValueError):
        detection_accuracy([], [])
    with pytest.raises(ValueError):
        detection_accuracy([True], [True, False])


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
def test_overall_is_sample_weighted_mix(rows):
    decided, truth = map(np.array, zip(*rows))
    known, novel, overall = detection_accuracy(decided, truth)
    n_novel = truth.sum()
    n_known = len(truth) - n_novel
    mix = (np.nan_to_num(known) * n_known + np.nan_to_num(novel) * n_novel) / len(truth)
    assert overall == pytest.approx(mix, abs=1e-12)


def test_recognition_rate_counts():
    assert recognition_rate([1, 2, 3], [1, 2, 3]) == 1.0
    pred = np.arange(20)
    true = pred.copy()
    true[0] = 99
    assert recognition_rate(pred, true) == 0.95
    with pytest.raises(ValueError):
        recognition_rate([], [])


def test_ari_identical_and_relabelled():
    assert adjusted_rand_index([0, 1, 1, 2], [0, 1, 1, 2]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0


def test_ari_six_sample_value():
    # 15 pairs; 6 together in truth, 3 together in the assignment, 2 in both
    value = adjusted_rand_index([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2])
    assert value == pytest.approx(8 / 33, abs=1e-15)
    assert value == pytest.approx(brute_force_ari([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2]), abs=1e-15)


def test_ari_degenerate_partitions():
    assert adjusted_rand_index([5, 5, 5], [1, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 1, 2], [3, 4, 5]) == 1.0
    assert adjusted_rand_index([0, 0, 0], [0, 1, 2]) == 0.0


def test_ari_errors():
    with pytest.raises(ValueError):
        adjusted_rand_index([0], [0])
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0, 1, 1])


def test_contingency_table_sums():
    t = contingency_table([0, 0, 1, 2], ["a", "b", "b", "b"])
    assert t.sum() == 4
    assert t.tolist() == [[1, 1], [0, 1], [0, 1]]


@given(labelings)
def test_ari_matches_pair_counting(pair):
    a, b = pair
    assert abs(adjusted_rand_index(a, b) - brute_force_ari(a, b)) <= 1e-12


@given(labelings)
def test_ari_symmetric_and_bounded(pair):
    a, b = pair
    assert adjusted_rand_index(a, b) == adjusted_rand_index(b, a)
    assert adjusted_rand_index(a, b) <= 1.0
    assert adjusted_rand_index(a, a) == 1.0


@given(labelings, st.permutations(range(4)))
def test_ari_invariant_to_label_names(pair, perm):
    a, b = pair
    renamed = [perm[v] + 10 for v in a]
    assert adjusted_rand_index(renamed, b) == adjusted_rand_index(a, b)


def test_ari_chance_level_near_zero():
    rng = np.random.default_rng(11)
    values = [adjusted_rand_index(rng.integers(0, 5, 1000), rng.integers(0, 5, 1000)) for _ in range(100)]
    assert -0.05 <= np.mean(values) <= 0.05


def test_ari_large_n_exact():
    n = 10**6
    a = np.arange(n) % 7
    assert adjusted_rand_index(a, a) == 1.0
    b = a.copy()
    b[:10] = 99
    assert 0.999 < adjusted_rand_index(a, b) < 1.0


def test_trial_result_dict_roundtrip():
    r = TrialResult(1.0, 0.5, 0.75, 1.0, 0.3, 4, 2, 17)
    assert TrialResult(**r.to_dict()) == r
