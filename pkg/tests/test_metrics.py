import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import accuracy_score, precision_score, recall_score

from foxann.metrics import confusion, mean_report, report


def test_confusion_identity():
    cm = confusion([0, 1, 2], [0, 1, 2], 3)
    assert np.array_equal(cm.counts, np.eye(3, dtype=int))


def test_confusion_hand_count():
    cm = confusion([0, 0, 1], [0, 1, 1], 2)
    assert cm.counts.tolist() == [[1, 1], [0, 1]]
    assert cm.total == 3


def test_confusion_empty_and_range():
    cm = confusion([], [], 3)
    assert cm.total == 0 and not cm.counts.any()
    with pytest.raises(ValueError):
        confusion([0, 3], [0, 1], 3)
    with pytest.raises(ValueError):
        confusion([0, 1], [0], 3)


def test_report_perfect():
    r = report(confusion([0, 1, 2, 2], [0, 1, 2, 2], 3), 0.01)
    assert (r.accuracy, r.precision, r.recall, r.f_score) == (1.0, 1.0, 1.0, 1.0)
    assert r.loss == 0.01


def test_report_binary_hand_values():
    # class 0 as positive: TP=3, FN=1, FP=1, TN=5
    y_true = [0] * 4 + [1] * 6
    y_pred = [0, 0, 0, 1] + [0] + [1] * 5
    r = report(confusion(y_true, y_pred, 2), 0.0)
    p0 = r0 = 3 / 4
    p1 = r1 = 5 / 6
    assert r.accuracy == pytest.approx(8 / 10)
    assert r.precision == pytest.approx((p0 + p1) / 2)
    assert r.recall == pytest.approx((r0 + r1) / 2)
    assert r.f_score == pytest.approx((p0 + p1) / 2)


def test_never_predicted_class_contributes_zero_precision():
    r = report(confusion([0, 1, 2], [0, 1, 1], 3), 0.0)
    assert r.precision == pytest.approx((1 + 0.5 + 0) / 3)
    assert r.recall == pytest.approx((1 + 1 + 0) / 3)


def test_report_empty_rejected():
    with pytest.raises(ValueError):
        report(confusion([], [], 2), 0.0)


def test_mean_report():
    a = report(confusion([0, 1], [0, 1], 2), 0.1)
    b = report(confusion([0, 1], [1, 1], 2), 0.3)
    m = mean_report([a, b])
    assert m.accuracy == pytest.approx(0.75)
    assert m.loss == pytest.approx(0.2)


labels = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60)


@settings(max_examples=100, deadline=None)
@given(pairs=labels, seed=st.integers(0, 1000))
def test_against_sklearn_and_permutation(pairs, seed):
    y_true = np.array([p[0] for p in pairs])
    y_pred = np.array([p[1] for p in pairs])
    r = report(confusion(y_true, y_pred, 4), 0.0)
    present = list(range(4))
    assert r.accuracy == pytest.approx(accuracy_score(y_true, y_pred))
    assert r.accuracy == pytest.approx(np.mean(y_true == y_pred))
    assert r.precision == pytest.approx(
        precision_score(y_true, y_pred, labels=present, average="macro", zero_division=0))
    assert r.recall == pytest.approx(
        recall_score(y_true, y_pred, labels=present, average="macro", zero_division=0))
    for v in (r.accuracy, r.precision, r.recall, r.f_score):
        assert 0.0 <= v <= 1.0
    if r.precision + r.recall > 0:
        assert r.f_score == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))
    perm = np.random.default_rng(seed).permutation(len(pairs))
    assert report(confusion(y_true[perm], y_pred[perm], 4), 0.0) == r


def test_symmetric_binary_errors_give_equal_precision_recall():
    y_true = [0] * 10 + [1] * 10
    y_pred = [0] * 8 + [1] * 2 + [1] * 8 + [0] * 2
    r = report(confusion(y_true, y_pred, 2), 0.0)
    assert r.precision == pytest.approx(r.recall)
