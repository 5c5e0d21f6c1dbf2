"""Scoring filled stacks against ground truth, and timed engine runs."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dineof import DineofConfig, _mask_bits, run_dineof
from .funksvd import FunkConfig, round_to_class, run_funk_svd
from .rasterstack import CLASS_CODES, DomainError, GridStack, ShapeError

__all__ = [
    "EvalReport",
    "METHODS",
    "confusion",
    "f1_scores",
    "precision_recall",
    "evaluate",
    "timed_fill",
    "baseline_mode_fill",
]

METHODS = ("dineof", "funk-svd", "baseline")


@dataclass
class EvalReport:
    """Scores for one filled stack.

    Scoring fields are None when no truth was supplied.
    """

    confusion: np.ndarray | None = None
    per_class_f1: np.ndarray | None = None
    macro_f1: float | None = None
    micro_f1: float | None = None
    accuracy: float | None = None
    scope: str = "masked-only"
    wall_time_s: float | None = None
    iterations_or_epochs: int | None = None

    @property
    def n_scored(self):
        return int(self.confusion.sum()) if self.confusion is not None else 0


def _codes(x):
    if isinstance(x, GridStack):
        vals = x.values
        if x.missing.any():
            raise DomainError("cannot score a stack with missing entries")
    else:
        vals = np.asarray(x, dtype=np.float64)
    if not np.all(np.isin(vals, CLASS_CODES)):
        raise DomainError("scoring needs categorical values in {1, 2, 3}")
    return vals.astype(np.int64)


def confusion(pred, truth, mask=None):
    """3x3 count matrix, rows = truth class, columns = predicted class.

    With ``mask`` only the masked (previously missing) pixels are counted.
    """
    p = _codes(pred)
    t = _codes(truth)
    if p.shape != t.shape:
        raise ShapeError(f"prediction shape {p.shape} does not match truth shape {t.shape}")
    if mask is not None:
        sel = _mask_bits(mask, p.shape)
        p, t = p[sel], t[sel]
    k = len(CLASS_CODES)
    return np.bincount((t.ravel() - 1) * k + (p.ravel() - 1), minlength=k * k).reshape(k, k)


def precision_recall(cm):
    cm = np.asarray(cm, dtype=np.float64)
    diag = np.diag(cm)
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    precision = np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)
    return precision, recall


def f1_scores(cm):
    """Per-class F1 and their mean over classes present in the truth.

    F1 is 0 for a class whose precision and recall are both 0.
    """
    cm = np.asarray(cm)
    if cm.shape != (3, 3) or (cm < 0).any():
        raise ValueError("confusion must be a nonnegative 3x3 matrix")
    if cm.sum() == 0:
        raise ValueError("confusion matrix is empty; nothing was scored")
    precision, recall = precision_recall(cm)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0)
    present = cm.sum(axis=1) > 0
    return f1, float(f1[present].mean())


def evaluate(pred, truth, mask=None, full_frame=False):
    """Confusion-based report; ``full_frame`` ignores ``mask``."""
    scope = "full-frame" if full_frame or mask is None else "masked-only"
    cm = confusion(pred, truth, None if scope == "full-frame" else mask)
    f1, macro = f1_scores(cm)
    acc = float(np.trace(cm) / cm.sum())
    return EvalReport(
        confusion=cm,
        per_class_f1=f1,
        macro_f1=macro,
        micro_f1=acc,  # single-label multiclass: micro-F1 equals accuracy
        accuracy=acc,
        scope=scope,
    )


def baseline_mode_fill(stack, mask):
    """Fill each missing pixel with its most frequent observed class over time.

    Ties go to the wetter (smaller) code. Pixels never observed fall back to
    the stack-wide mode.
    """
    bits = _mask_bits(mask, stack.shape) | stack.missing
    if bits.all():
        raise ValueError("baseline_mode_fill needs at least one observed entry")
    obs = ~bits
    vals = stack.values
    counts = np.stack([((vals == c) & obs).sum(axis=0) for c in CLASS_CODES])
    # argmax returns the first maximum, i.e. the wetter class on ties
    pixel_mode = np.asarray(CLASS_CODES, dtype=float)[counts.argmax(axis=0)]
    totals = counts.sum(axis=1)
    global_mode = float(CLASS_CODES[int(totals.argmax())])
    pixel_mode[counts.sum(axis=0) == 0] = global_mode
    filled = np.where(bits, pixel_mode[None, :], vals)
    return GridStack(filled, np.zeros(filled.shape, dtype=bool), stack.rows, stack.cols)


def _run_method(method, stack, mask, config):
    if method == "dineof":
        filled, trace = run_dineof(stack, mask, config or DineofConfig())
        return filled, trace.iterations
    if method == "funk-svd":
        filled, report = run_funk_svd(stack, mask, config or FunkConfig())
        return filled, report.epochs
    if method == "baseline":
        return baseline_mode_fill(stack, mask).values, 0
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def timed_fill(method, stack, mask, config=None, truth=None, full_frame=False):
    """Run one engine and time the fill call alone.

    Returns the rounded categorical stack and an :class:`EvalReport` carrying
    wall time and iteration/epoch count; scores are filled in when ``truth``
    is given.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    start = time.perf_counter()
    raw, n_iter = _run_method(method, stack, mask, config)
    elapsed = time.perf_counter() - start
    filled = round_to_class(raw, stack.rows, stack.cols)
    if truth is not None:
        report = evaluate(filled, truth, mask, full_frame=full_frame)
    else:
        report = EvalReport(scope="full-frame" if full_frame else "masked-only")
    report.wall_time_s = elapsed
    report.iterations_or_epochs = n_iter
    return filled, report
