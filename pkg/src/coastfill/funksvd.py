"""Regularized low-rank factorization fit by stochastic gradient descent.

The data matrix is approximated by ``P @ Q`` with ``P`` of shape ``(M, k)``
and ``Q`` of shape ``(k, N)``, minimizing the squared error over observed
entries plus ``lam * (||P||_F^2 + ||Q||_F^2)``. Each latent vector is
regularized once; putting the penalty inside the per-entry sum would only
rescale ``lam`` by the observation counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .dineof import _as_matrix, _mask_bits
from .rasterstack import CLASS_CODES, DomainError, GridStack

__all__ = [
    "FunkConfig",
    "FactorModel",
    "FitReport",
    "DivergenceError",
    "init_factors",
    "objective",
    "gradient",
    "sgd_epoch",
    "run_funk_svd",
    "round_to_class",
]

DIVERGENCE_LIMIT = 1e6


class DivergenceError(FloatingPointError):
    """SGD produced a non-finite or exploding value."""


@dataclass(frozen=True)
class FunkConfig:
    rank: int = 10
    lam: float = 0.05
    learning_rate: float = 0.005
    epochs: int = 100
    seed: int = 42
    init_scale: float = 0.1

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.init_scale < 0:
            raise ValueError(f"init_scale must be >= 0, got {self.init_scale}")


@dataclass
class FactorModel:
    P: np.ndarray  # (M, k), row i is p_i
    Q: np.ndarray  # (k, N), column j is q_j

    def predict(self):
        return self.P @ self.Q

    def copy(self):
        return FactorModel(self.P.copy(), self.Q.copy())

    @property
    def rank(self):
        return self.P.shape[1]


@dataclass
class FitReport:
    objectives: list = field(default_factory=list)
    initial_objective: float = float("nan")
    model: FactorModel | None = None

    @property
    def epochs(self):
        return len(self.objectives)


def init_factors(M, N, config):
    """Gaussian factors with standard deviation ``config.init_scale``."""
    rng = np.random.default_rng(config.seed)
    P = rng.normal(0.0, 1.0, (M, config.rank)) * config.init_scale
    Q = rng.normal(0.0, 1.0, (config.rank, N)) * config.init_scale
    return FactorModel(P, Q)


def _observed(mask, shape):
    return ~_mask_bits(mask, shape)


def objective(model, X0, mask, lam):
    X0 = _as_matrix(X0)
    obs = _observed(mask, X0.shape)
    err = np.where(obs, X0 - model.predict(), 0.0)
    return float(np.sum(err**2) + lam * (np.sum(model.P**2) + np.sum(model.Q**2)))


def gradient(model, X0, mask, lam):
    """Gradient of :func:`objective` with respect to ``P`` and ``Q``."""
    X0 = _as_matrix(X0)
    obs = _observed(mask, X0.shape)
    err = np.where(obs, X0 - model.predict(), 0.0)
    dP = -2.0 * err @ model.Q.T + 2.0 * lam * model.P
    dQ = -2.0 * model.P.T @ err + 2.0 * lam * model.Q
    return dP, dQ


@numba.njit(cache=True)
def _sgd_pass(P, Qt, rows, cols, vals, order, lr, lam, limit):
    # Qt is Q transposed so both latent vectors are contiguous rows.
    k = P.shape[1]
    tmp = np.empty(k)
    for t in range(order.size):
        idx = order[t]
        i = rows[idx]
        j = cols[idx]
        pred = 0.0
        for f in range(k):
            pred += P[i, f] * Qt[j, f]
        e = vals[idx] - pred
        if not abs(e) <= limit:
            return t
        for f in range(k):
            tmp[f] = P[i, f]
            P[i, f] += lr * (2.0 * e * Qt[j, f] - 2.0 * lam * P[i, f])
        for f in range(k):
            Qt[j, f] += lr * (2.0 * e * tmp[f] - 2.0 * lam * Qt[j, f])
    return -1


def _entries(X0, mask):
    X0 = _as_matrix(X0)
    rows, cols = np.nonzero(_observed(mask, X0.shape))
    return rows.astype(np.int64), cols.astype(np.int64), X0[rows, cols].astype(np.float64)


def _epoch_order(n, seed, epoch_index):
    return np.random.default_rng([seed, epoch_index]).permutation(n).astype(np.int64)


def _run_epoch(model, entries, config, epoch_index):
    rows, cols, vals = entries
    order = _epoch_order(vals.size, config.seed, epoch_index)
    Qt = np.ascontiguousarray(model.Q.T)
    P = np.ascontiguousarray(model.P)
    bad = _sgd_pass(
        P, Qt, rows, cols, vals, order,
        float(config.learning_rate), float(config.lam), DIVERGENCE_LIMIT,
    )
    if bad >= 0 or not (np.isfinite(P).all() and np.isfinite(Qt).all()):
        raise DivergenceError(
            f"SGD diverged in epoch {epoch_index} (learning_rate={config.learning_rate}); "
            "try a smaller learning rate"
        )
    return FactorModel(P, np.ascontiguousarray(Qt.T))


def sgd_epoch(model, X0, mask, config, epoch_index):
    """One SGD pass over the observed entries in a ``(seed, epoch_index)``-shuffled order.

    Returns a new model; ``model`` is left untouched.
    """
    return _run_epoch(model.copy(), _entries(X0, mask), config, epoch_index)


def run_funk_svd(stack, mask, config=FunkConfig(), model=None):
    """Fill missing entries with the fitted ``P @ Q``.

    Parameters
    ----------
    stack : GridStack or ndarray, shape (M, N)
    mask : MaskMatrix or bool ndarray
        Entries to fill. Entries already missing in ``stack`` are added.
    config : FunkConfig
    model : FactorModel, optional
        Starting factors; drawn with :func:`init_factors` when omitted.

    Returns
    -------
    filled : ndarray, shape (M, N)
        Observed entries copied from the input, missing entries predicted.
    report : FitReport
        Objective after every epoch.
    """
    X0 = _as_matrix(stack)
    bits = _mask_bits(mask, X0.shape)
    if hasattr(stack, "missing"):
        bits = bits | stack.missing
    X0 = np.where(bits, 0.0, X0)
    if bits.all():
        raise ValueError("run_funk_svd needs at least one observed entry")
    M, N = X0.shape
    if model is None:
        model = init_factors(M, N, config)
    report = FitReport(initial_objective=objective(model, X0, bits, config.lam))
    entries = _entries(X0, bits)
    model = model.copy()
    for epoch in range(config.epochs):
        model = _run_epoch(model, entries, config, epoch)
        report.objectives.append(objective(model, X0, bits, config.lam))
    filled = np.where(bits, model.predict(), X0)
    report.model = model
    return filled, report


def round_to_class(x, rows=None, cols=None):
    """Round to the nearest class code (halves go up), then clamp to [1, 3].

    Accepts a :class:`GridStack` or an ``(M, N)`` array and returns a fully
    observed categorical :class:`GridStack`.
    """
    if isinstance(x, GridStack):
        rows, cols = x.rows, x.cols
        arr = np.where(x.missing, np.nan, x.values)
    else:
        arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if rows is None and cols is None:
            rows, cols = 1, arr.shape[1]
    if not np.all(np.isfinite(arr)):
        raise DomainError("round_to_class needs finite input")
    codes = np.clip(np.floor(arr + 0.5), CLASS_CODES[0], CLASS_CODES[-1])
    if rows is None:
        rows = arr.shape[1] // cols
    if cols is None:
        cols = arr.shape[1] // rows
    return GridStack(codes, np.zeros(codes.shape, dtype=bool), rows, cols)
