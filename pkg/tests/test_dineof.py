import math

import numpy as np
import pytest

from coastfill.dineof import (
    ConvergenceWarning,
    DineofConfig,
    dineof_step,
    error_propagation_report,
    initial_fill,
    run_dineof,
    svd_split,
    verify_truncation_identity,
)
from coastfill.masking import MaskMatrix, apply_mask, frame_mask, synthesize_cloud
from coastfill.rasterstack import GridStack
from coastfill.synth import SynthConfig, generate_landscape, generate_lowrank_numeric

NA = np.nan


def rank3_problem(seed=0, frac=0.1):
    X = generate_lowrank_numeric(seed, 20, 50, 3)
    rng = np.random.default_rng(seed + 100)
    bits = np.zeros(X.shape, bool)
    bits.flat[rng.choice(X.size, int(frac * X.size), replace=False)] = True
    return X, bits


# -- initial fill -----------------------------------------------------------

def test_initial_fill_zeroes_missing():
    s = GridStack.from_array([[1, NA, 3]])
    np.testing.assert_array_equal(initial_fill(s, s.missing), [[1, 0, 3]])


def test_initial_fill_edge_cases():
    s = GridStack.from_array([[1, 2], [NA, NA]])
    np.testing.assert_array_equal(initial_fill(s, s.missing), [[1, 2], [0, 0]])
    full = GridStack.from_array([[1, 2], [3, 1]])
    np.testing.assert_array_equal(initial_fill(full, full.missing), full.values)


def test_initial_fill_mean_extension():
    s = GridStack.from_array([[1, NA], [3, 2]])
    np.testing.assert_array_equal(initial_fill(s, s.missing, init="mean"), [[1, 2], [3, 2]])


# -- svd_split -------------------------------------------------------------

def test_split_rank1_input():
    X = np.array([[1.0, 2], [2, 4]])
    sp = svd_split(X, 1)
    np.testing.assert_allclose(sp.leading, X, atol=1e-12)
    assert np.abs(sp.residual).max() < 1e-12


def test_split_identity_full_rank():
    sp = svd_split(np.eye(3), 3)
    np.testing.assert_allclose(sp.leading, np.eye(3), atol=1e-14)
    assert np.abs(sp.residual).max() == 0


def test_split_tail_energy():
    X = np.random.default_rng(3).standard_normal((10, 20))
    sp = svd_split(X, 5)
    lhs = np.linalg.norm(X - sp.leading) ** 2
    rhs = np.sum(sp.S[5:] ** 2)
    assert abs(lhs - rhs) / rhs < 1e-10


@pytest.mark.parametrize("shape, k", [((8, 12), 3), ((15, 6), 2), ((7, 7), 7)])
def test_split_invariants(shape, k):
    X = np.random.default_rng(k).standard_normal(shape)
    sp = svd_split(X, k)
    r = sp.S.size
    assert np.linalg.norm(sp.U.T @ sp.U - np.eye(r), 2) < 1e-10
    assert np.linalg.norm(sp.V.T @ sp.V - np.eye(r), 2) < 1e-10
    assert np.all(np.diff(sp.S) <= 0) and np.all(sp.S >= 0)
    rel = np.linalg.norm(sp.leading + sp.residual - X) / np.linalg.norm(X)
    assert rel < 1e-10


def test_eckart_young_against_random_candidates():
    rng = np.random.default_rng(8)
    for trial in range(100):
        X = rng.standard_normal((6, 9))
        k = int(rng.integers(1, 5))
        best = np.linalg.norm(X - svd_split(X, k).leading)
        cand = rng.standard_normal((6, k)) @ rng.standard_normal((k, 9))
        # a scaled least-squares fit of the candidate direction, to give it a fair shot
        alpha = np.sum(cand * X) / np.sum(cand * cand)
        assert np.linalg.norm(X - alpha * cand) >= best


def test_split_rejects_bad_rank():
    with pytest.raises(ValueError):
        svd_split(np.ones((3, 4)), 4)
    with pytest.raises(ValueError):
        svd_split(np.ones((3, 4)), 0)


# -- dineof_step -------------------------------------------------------------

def test_step_no_missing_returns_x0():
    X0 = np.arange(12.0).reshape(3, 4)
    out = dineof_step(X0 + 5, X0, np.zeros((3, 4), bool), 2)
    np.testing.assert_array_equal(out, X0)


def test_step_rank1_hand_oracle():
    # [[1,2],[2,0]] is symmetric with eigenvalues (1 +/- sqrt 17)/2; the
    # leading singular pair comes from the larger one, eigenvector (2, l-1).
    lam = (1 + math.sqrt(17)) / 2
    expected = lam * (lam - 1) ** 2 / (4 + (lam - 1) ** 2)
    X0 = np.array([[1.0, 2], [2, 0]])
    bits = np.array([[False, False], [False, True]])
    out = dineof_step(X0, X0, bits, 1)
    assert out[1, 1] == pytest.approx(expected, rel=1e-12)
    np.testing.assert_array_equal(out[~bits], X0[~bits])


def test_step_preserves_observed_bitwise():
    rng = np.random.default_rng(2)
    X0 = rng.standard_normal((6, 10))
    bits = rng.random(X0.shape) < 0.3
    X0[bits] = 0
    Xp = X0 + bits * rng.standard_normal(X0.shape)
    out = dineof_step(Xp, X0, bits, 3)
    assert np.array_equal(out[~bits], X0[~bits])


# -- run_dineof ------------------------------------------------------------

def test_rank1_completion_converges_to_four():
    X = np.array([[1.0, 2], [2, NA]])
    s = GridStack.from_array(X)
    filled, trace = run_dineof(s, s.missing, DineofConfig(rank=1, tol=1e-10))
    assert filled[1, 1] == pytest.approx(4.0, abs=1e-6)
    assert trace.converged


def test_empty_mask_single_iteration():
    s = GridStack.from_array([[1, 2, 3], [3, 2, 1]])
    filled, trace = run_dineof(s, MaskMatrix.empty(2, 1, 3), DineofConfig(rank=1))
    assert trace.iterations == 1 and trace.converged
    assert np.array_equal(filled, s.values)


def test_rank3_oracle():
    X, bits = rank3_problem()
    filled, trace = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=3, tol=1e-10, max_iter=200), truth=X)
    assert np.abs(filled - X)[bits].max() < 1e-3
    assert trace.iterations <= 200
    assert np.array_equal(filled[~bits], X[~bits])


def test_observed_entries_invariant_each_iteration():
    X, bits = rank3_problem(seed=4)
    X0 = np.where(bits, 0, X)
    Xp = X0
    for _ in range(20):
        Xp = dineof_step(Xp, X0, bits, 3)
        assert np.array_equal(Xp[~bits], X[~bits])


def test_determinism():
    X, bits = rank3_problem(seed=6)
    a, _ = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=2, tol=1e-8))
    b, _ = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=2, tol=1e-8))
    assert a.tobytes() == b.tobytes()


def test_max_iter_warns():
    X, bits = rank3_problem(seed=1)
    with pytest.warns(ConvergenceWarning):
        _, trace = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=3, tol=1e-14, max_iter=3))
    assert trace.max_iter_reached and not trace.converged
    assert trace.iterations == 3


def test_trace_final_change_below_tol():
    X, bits = rank3_problem(seed=2)
    _, trace = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=3, tol=1e-6))
    assert trace.converged
    assert trace.records[-1].rel_change < 1e-6
    assert [r.iteration for r in trace.records] == list(range(1, trace.iterations + 1))


def test_config_validation():
    with pytest.raises(ValueError):
        DineofConfig(rank=0)
    with pytest.raises(ValueError):
        DineofConfig(tol=0)
    with pytest.raises(ValueError):
        DineofConfig(max_iter=0)
    with pytest.raises(ValueError):
        run_dineof(np.ones((3, 4)), np.zeros((3, 4), bool), DineofConfig(rank=4))


# -- truncation identity and error report ----------------------------------

def test_truncation_identity_random():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 12))
    assert verify_truncation_identity(X, 3, rng.random(X.shape) < 0.4) < 1e-10


def test_truncation_identity_full_rank():
    X = np.random.default_rng(1).standard_normal((5, 7))
    mask = np.ones(X.shape, bool)
    assert verify_truncation_identity(X, 5, mask) < 1e-14


def test_report_empty_mask():
    s = GridStack.from_array([[1, 2, 3], [3, 2, 1]])
    _, trace = run_dineof(s, MaskMatrix.empty(2, 1, 3), DineofConfig(rank=1), truth=s)
    rep = error_propagation_report(trace)
    assert np.all(rep["error_missing_fro"] == 0)
    assert np.all(rep["remainder_missing_fro"] == 0)


def test_report_rank3_error_falls():
    X, bits = rank3_problem()
    _, trace = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=3, tol=1e-10, max_iter=200), truth=X)
    rep = error_propagation_report(trace)
    err = rep["error_missing_fro"]
    assert err[-1] < 1e-3 < err[0]
    assert np.all(rep["recurrence_deviation"] < 1e-10)
    np.testing.assert_allclose(rep["cumulative_remainder"], np.cumsum(rep["remainder_missing_fro"]))


@pytest.mark.filterwarnings("ignore::coastfill.dineof.ConvergenceWarning")
def test_report_categorical_stack():
    truth = generate_landscape(SynthConfig(seed=5, frames=20, rows=64, cols=64))
    mask = frame_mask(truth, 0, synthesize_cloud((64, 64), 0.4, 2))
    _, trace = run_dineof(apply_mask(truth, mask), mask, DineofConfig(rank=10, max_iter=60), truth=truth)
    rep = error_propagation_report(trace)
    n = trace.iterations
    assert all(len(v) == n for v in rep.values())
    assert np.all(np.isfinite(rep["error_missing_fro"]))


@pytest.mark.filterwarnings("ignore::coastfill.dineof.ConvergenceWarning")
def test_report_requires_truth():
    X, bits = rank3_problem()
    _, trace = run_dineof(np.where(bits, 0, X), bits, DineofConfig(rank=3, max_iter=5))
    with pytest.raises(ValueError):
        error_propagation_report(trace)

