import itertools

import numpy as np
import pytest

from coastfill.evaluation import (
    baseline_mode_fill,
    confusion,
    evaluate,
    f1_scores,
    timed_fill,
)
from coastfill.dineof import DineofConfig
from coastfill.funksvd import FunkConfig
from coastfill.masking import MaskMatrix
from coastfill.rasterstack import DomainError, GridStack

NA = np.nan


def brute_force_f1(truth, pred):
    """Per-class F1 and macro F1 from raw label pairs, no confusion matrix."""
    per_class = []
    present = []
    for c in (1, 2, 3):
        tp = sum(1 for t, p in zip(truth, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, pred) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(f1)
        if tp + fn:
            present.append(f1)
    return per_class, sum(present) / len(present)


def test_confusion_perfect_is_diagonal():
    t = np.array([[1, 2, 3, 3, 1]])
    cm = confusion(t, t)
    assert np.array_equal(cm, np.diag([2, 1, 2]))
    assert evaluate(t, t).accuracy == 1.0


def test_confusion_tally():
    cm = confusion(np.array([[1, 2, 2]]), np.array([[1, 1, 2]]))
    expected = np.zeros((3, 3), int)
    expected[0, 0] = expected[0, 1] = expected[1, 1] = 1
    assert np.array_equal(cm, expected)


def test_confusion_masked_scope():
    cm = confusion(np.array([[1, 2, 2]]), np.array([[1, 1, 2]]), np.array([[0, 0, 1]], bool))
    assert cm[1, 1] == 1 and cm.sum() == 1


def test_confusion_rejects_noncategorical():
    with pytest.raises(DomainError):
        confusion(np.array([[1.5]]), np.array([[1]]))


def test_f1_small_example():
    f1, macro = f1_scores(confusion(np.array([[1, 2, 2]]), np.array([[1, 1, 2]])))
    assert f1[0] == pytest.approx(2 / 3, abs=1e-15)
    assert f1[1] == pytest.approx(2 / 3, abs=1e-15)
    assert macro == pytest.approx(2 / 3, abs=1e-15)


def test_f1_perfect():
    f1, macro = f1_scores(np.diag([3, 4, 5]))
    assert np.all(f1 == 1) and macro == 1


def test_f1_missing_class_prediction():
    f1, _ = f1_scores(confusion(np.array([[1, 2, 2]]), np.array([[1, 2, 3]])))
    assert f1[2] == 0


def test_f1_empty_confusion():
    with pytest.raises(ValueError):
        f1_scores(np.zeros((3, 3), int))


def test_f1_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        truth = rng.integers(1, 4, n)
        pred = np.where(rng.random(n) < 0.6, truth, rng.integers(1, 4, n))
        f1, macro = f1_scores(confusion(pred[None], truth[None]))
        bf_f1, bf_macro = brute_force_f1(truth.tolist(), pred.tolist())
        np.testing.assert_allclose(f1, bf_f1, atol=1e-12, rtol=0)
        assert abs(macro - bf_macro) < 1e-12
        present = f1[np.isin([1, 2, 3], truth)]
        assert present.min() - 1e-15 <= macro <= present.max() + 1e-15


def test_masked_scope_counts_only_masked():
    rng = np.random.default_rng(1)
    truth = rng.integers(1, 4, (4, 25))
    pred = rng.integers(1, 4, (4, 25))
    mask = rng.random((4, 25)) < 0.3
    rep = evaluate(pred, truth, mask)
    assert rep.scope == "masked-only"
    assert rep.n_scored == mask.sum()
    assert evaluate(pred, truth, mask, full_frame=True).n_scored == 100


# -- baseline -------------------------------------------------------------

@pytest.mark.parametrize(
    "column, expected",
    [([1, 1, 3], 1), ([1, 3], 1), ([3, 3, 2], 3), ([2, 3, 3, 2], 2)],
)
def test_baseline_mode(column, expected):
    data = np.array(column + [NA], dtype=float)[:, None]
    s = GridStack.from_array(data)
    out = baseline_mode_fill(s, s.missing)
    assert out.values[-1, 0] == expected
    assert not out.missing.any()


def test_baseline_identity_on_empty_mask():
    s = GridStack.from_array([[1, 2], [3, 3]])
    assert baseline_mode_fill(s, s.missing).equals(s)


def test_baseline_global_fallback():
    s = GridStack.from_array([[1, NA], [1, NA], [2, NA]])
    out = baseline_mode_fill(s, s.missing)
    assert np.all(out.values[:, 1] == 1)


def test_baseline_fully_missing():
    s = GridStack.from_array([[NA, NA]])
    with pytest.raises(ValueError):
        baseline_mode_fill(s, s.missing)


# -- timing -------------------------------------------------------------------

def small_stack():
    rng = np.random.default_rng(0)
    return GridStack.from_array(rng.integers(1, 4, (6, 16)).astype(float), 4, 4)


def test_timed_dineof_empty_mask():
    s = small_stack()
    filled, rep = timed_fill(
        "dineof", s, MaskMatrix.empty(6, 4, 4), DineofConfig(rank=3), truth=s, full_frame=True
    )
    assert rep.iterations_or_epochs == 1
    assert filled.equals(s)
    assert rep.macro_f1 == 1.0


def test_timed_funk_epochs():
    s = small_stack()
    mask = MaskMatrix(np.eye(6, 16, dtype=bool), 4, 4)
    _, rep = timed_fill("funk-svd", s, mask, FunkConfig(rank=2, epochs=7))
    assert rep.iterations_or_epochs == 7
    assert 0 <= rep.wall_time_s < float("inf")
    assert rep.macro_f1 is None


def test_timed_unknown_method():
    s = small_stack()
    with pytest.raises(ValueError):
        timed_fill("datawig", s, MaskMatrix.empty(6, 4, 4))
