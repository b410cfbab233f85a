import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advos.errors import MetricError
from advos.metrics import EvalReport, acsa, confusion, gmean, recalls


def brute_scores(cm):
    """Independent reference: exact rational recalls, float-free ACSA, log-free GM."""
    rec = []
    for i, row in enumerate(cm):
        rec.append(Fraction(int(row[i]), int(sum(int(v) for v in row))))
    a = float(100 * sum(rec, Fraction(0)) / len(rec))
    prod = Fraction(1)
    for r in rec:
        prod *= r
    g = 100.0 * float(prod) ** (1.0 / len(rec)) if prod else 0.0
    return a, g


def test_confusion_perfect_and_constant():
    np.testing.assert_array_equal(confusion([0, 1, 2], [0, 1, 2], 3), np.eye(3))
    cm = confusion([0, 1, 2, 1], [0, 0, 0, 0], 3)
    assert cm[:, 1:].sum() == 0 and cm[:, 0].tolist() == [1, 2, 1]


def test_confusion_hand_tally():
    cm = confusion([0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 0, 2], 3)
    np.testing.assert_array_equal(cm, [[1, 1, 0], [0, 2, 0], [1, 0, 1]])


def test_confusion_errors():
    with pytest.raises(MetricError):
        confusion([0, 3], [0, 0], 3)
    with pytest.raises(MetricError):
        confusion([0, 1], [0], 2)


@pytest.mark.parametrize("cm,a,g", [
    ([[90, 0], [10, 0]], 50.0, 0.0),            # all-majority binary predictor
    ([[5, 0], [0, 7]], 100.0, 100.0),
    ([[8, 2, 0], [4, 6, 0], [0, 6, 4]], 60.0, 100 * (0.8 * 0.6 * 0.4) ** (1 / 3)),
    ([[9, 1], [6, 4]], 65.0, 60.0),
])
def test_examples(cm, a, g):
    assert acsa(cm) == pytest.approx(a, abs=1e-10)
    assert gmean(cm) == pytest.approx(g, abs=1e-10)


def test_empty_row():
    with pytest.raises(MetricError):
        acsa([[1, 0], [0, 0]])


@st.composite
def confusions(draw):
    c = draw(st.integers(2, 8))
    rows = [draw(st.lists(st.integers(0, 50), min_size=c, max_size=c)) for _ in range(c)]
    for i, row in enumerate(rows):
        if sum(row) == 0:
            row[i] = 1
    return np.array(rows)


@settings(max_examples=500, deadline=None)
@given(confusions())
def test_scores_match_brute_force(cm):
    a, g = brute_scores(cm)
    assert abs(acsa(cm) - a) < 1e-10
    assert abs(gmean(cm) - g) < 1e-10
    assert gmean(cm) <= acsa(cm) + 1e-10


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 60), st.integers(0, 60), st.integers(1, 60), st.integers(0, 60))
def test_binary_formula(np_, tp_raw, nn_, tn_raw):
    tp, tn = min(tp_raw, np_), min(tn_raw, nn_)
    # class 0 = positive here; rows are true classes
    cm = np.array([[tp, np_ - tp], [nn_ - tn, tn]])
    assert acsa(cm) == 100 * 0.5 * (tp / np_ + tn / nn_)


@settings(max_examples=100, deadline=None)
@given(confusions(), st.randoms())
def test_relabeling_invariance(cm, rnd):
    perm = list(range(len(cm)))
    rnd.shuffle(perm)
    pm = cm[np.ix_(perm, perm)]
    assert acsa(pm) == pytest.approx(acsa(cm), abs=1e-10)
    assert gmean(pm) == pytest.approx(gmean(cm), abs=1e-10)


def test_report_invariants_and_round_trip():
    rep = EvalReport.from_predictions([0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 0, 2], 3, epoch=4)
    np.testing.assert_array_equal(rep.confusion.sum(axis=1), [2, 2, 2])
    assert rep.acsa == pytest.approx(100 * (0.5 + 1 + 0.5) / 3)
    d = rep.to_dict()
    assert set(d) == {"acsa", "gm", "recalls", "confusion", "epoch"}
    assert d["acsa"] == 66.67
    assert EvalReport.from_dict(d).to_dict() == d
    np.testing.assert_array_equal(recalls(rep.confusion), rep.recalls)
    assert math.isclose(rep.gm, 100 * 0.25 ** (1 / 3))
