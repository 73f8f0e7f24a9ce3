import numpy as np
import pytest
from hypothesis import given, strategies as st

from agewatch.errors import LengthMismatch
from agewatch.metrics import ConfusionMatrix, derive, score
from oracles import derive_exact


def test_score_basic_cases():
    assert score([1, 0, 1], [1, 0, 1]) == ConfusionMatrix(tp=2, fp=0, tn=1, fn=0)
    assert score([1, 1], [0, 0]).fp == 2
    assert score([], []) == ConfusionMatrix()


def test_score_rejects_mismatch_and_non_binary():
    with pytest.raises(LengthMismatch):
        score([1, 0], [1])
    with pytest.raises(ValueError):
        score([2, 0], [1, 0])


def test_derive_hand_values():
    m = derive(ConfusionMatrix(tp=2, fp=1, tn=0, fn=1))
    assert m.precision == pytest.approx(2 / 3)
    assert m.recall == pytest.approx(2 / 3)
    assert m.f1 == pytest.approx(2 / 3)
    assert m.accuracy == 0.5
    assert m.undefined == ()


def test_perfect_matrix():
    m = derive(ConfusionMatrix(tp=5, tn=7))
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)


def test_zero_over_zero_is_flagged_not_raised():
    m = derive(ConfusionMatrix(tn=4))
    assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0
    assert set(m.undefined) == {"precision", "recall", "f1"}
    assert derive(ConfusionMatrix()).undefined[0] == "accuracy"


def test_total_and_addition():
    a = ConfusionMatrix(1, 2, 3, 4)
    assert a.total == 10
    assert a + a == ConfusionMatrix(2, 4, 6, 8)


counts = st.integers(min_value=0, max_value=10_000)


@given(counts, counts, counts, counts)
def test_derive_matches_rational_oracle(tp, fp, tn, fn):
    m = derive(ConfusionMatrix(tp, fp, tn, fn))
    exp = derive_exact(tp, fp, tn, fn)
    assert np.allclose([m.accuracy, m.precision, m.recall, m.f1], exp, rtol=0, atol=1e-12)
    if m.precision + m.recall > 0:
        assert m.f1 <= max(m.precision, m.recall) + 1e-12
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall),
                                     abs=1e-12)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), max_size=200),
       st.randoms(use_true_random=False))
def test_permutation_invariance(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    p1, t1 = zip(*pairs) if pairs else ((), ())
    p2, t2 = zip(*shuffled) if shuffled else ((), ())
    assert score(p1, t1) == score(p2, t2)
    assert score(p1, t1).total == len(pairs)
