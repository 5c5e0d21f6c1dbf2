"""Blocking-rate sweeps over all filling methods.

For every ``(rate, seed)`` a cloud is synthesized on the truth frame and the
same mask is handed to every method, so the comparison is fair; the mask
checksum goes into each result row to make that auditable.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dineof import DineofConfig
from .evaluation import METHODS, timed_fill
from .funksvd import FunkConfig
from .masking import apply_mask, frame_mask, synthesize_cloud

__all__ = [
    "BenchPlan",
    "BenchRow",
    "run_bench",
    "emit_report",
    "summarize",
    "default_rates",
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
]

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "rate", "seed", "method", "mask_checksum", "macro_f1", "micro_f1",
    "accuracy", "wall_time_s", "iterations", "status",
]
SUMMARY_COLUMNS = [
    "rate", "method", "n_runs", "n_failed", "macro_f1_mean", "macro_f1_std",
    "wall_time_s_mean", "wall_time_s_std",
]


def default_rates():
    return [round(0.05 * i, 2) for i in range(1, 11)]


@dataclass(frozen=True)
class BenchPlan:
    rates: tuple = tuple(default_rates())
    methods: tuple = METHODS
    seeds: tuple = (1, 2, 3, 4, 5)
    truth_frame: int = 0
    dineof: DineofConfig = DineofConfig()
    funk: FunkConfig = FunkConfig()

    def __post_init__(self):
        if not self.rates or any(not 0.0 < r <= 1.0 for r in self.rates):
            raise ValueError(f"rates must be nonempty and lie in (0, 1], got {list(self.rates)}")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; expected a subset of {METHODS}")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def config_for(self, method):
        return {"dineof": self.dineof, "funk-svd": self.funk}.get(method)


@dataclass
class BenchRow:
    rate: float
    seed: int
    method: str
    mask_checksum: str
    macro_f1: float = math.nan
    micro_f1: float = math.nan
    accuracy: float = math.nan
    wall_time_s: float = math.nan
    iterations: int = -1
    status: str = "ok"


def _run_cell(stack, plan, rate, seed, method, mask, checksum):
    masked = apply_mask(stack, mask)
    row = BenchRow(rate, seed, method, checksum)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            _, report = timed_fill(
                method, masked, mask, plan.config_for(method), truth=stack
            )
    except Exception as exc:  # one bad cell must not void the sweep
        logger.warning("cell rate=%s seed=%s method=%s failed: %s", rate, seed, method, exc)
        row.status = f"failed: {type(exc).__name__}"
        return row
    row.macro_f1 = report.macro_f1
    row.micro_f1 = report.micro_f1
    row.accuracy = report.accuracy
    row.wall_time_s = report.wall_time_s
    row.iterations = report.iterations_or_epochs
    if caught:
        row.status = "ok-max-iter"
    return row


def run_bench(stack, plan=BenchPlan(), workers=1):
    """Run every ``(rate, seed, method)`` cell and return rows in that order.

    Failures are recorded per row (``status`` starts with ``failed``) and do
    not stop the sweep.
    """
    tf = plan.truth_frame
    if not 0 <= tf < stack.frames:
        raise ValueError(f"truth frame {tf} out of range for {stack.frames} frames")
    if stack.missing[tf].any():
        raise ValueError(f"truth frame {tf} must be fully observed")

    jobs = []
    for rate in plan.rates:
        for seed in plan.seeds:
            try:
                cloud = synthesize_cloud((stack.rows, stack.cols), rate, seed)
            except Exception as exc:
                for method in plan.methods:
                    jobs.append(BenchRow(rate, seed, method, "", status=f"failed: {type(exc).__name__}"))
                continue
            mask = frame_mask(stack, tf, cloud)
            checksum = mask.checksum()
            for method in plan.methods:
                jobs.append((stack, plan, rate, seed, method, mask, checksum))

    def run(job):
        return job if isinstance(job, BenchRow) else _run_cell(*job)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def summarize(results):
    """Mean and population standard deviation per ``(rate, method)``, in first-seen order."""
    groups = {}
    for row in results:
        groups.setdefault((row.rate, row.method), []).append(row)
    summary = []
    for (rate, method), rows in groups.items():
        ok = [r for r in rows if r.status.startswith("ok")]
        f1 = np.array([r.macro_f1 for r in ok], dtype=float)
        wt = np.array([r.wall_time_s for r in ok], dtype=float)
        summary.append({
            "rate": rate,
            "method": method,
            "n_runs": len(rows),
            "n_failed": len(rows) - len(ok),
            "macro_f1_mean": float(f1.mean()) if f1.size else math.nan,
            "macro_f1_std": float(f1.std()) if f1.size else math.nan,
            "wall_time_s_mean": float(wt.mean()) if wt.size else math.nan,
            "wall_time_s_std": float(wt.std()) if wt.size else math.nan,
        })
    return summary


def summary_path(path):
    path = Path(path)
    return path.with_name(f"{path.stem}_summary{path.suffix or '.csv'}")


def emit_report(results, path, include_timing=True):
    """Write the long-format results CSV and a ``<stem>_summary.csv`` beside it.

    With ``include_timing=False`` the wall-time columns are left empty so
    that reruns produce byte-identical files.
    """
    if not results:
        raise ValueError("no results to report")
    summary = summarize(results)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in results:
            values = [getattr(row, c) for c in RESULT_COLUMNS]
            if not include_timing:
                values[RESULT_COLUMNS.index("wall_time_s")] = math.nan
            writer.writerow([_fmt(v) for v in values])
    with open(summary_path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summary:
            if not include_timing:
                s = dict(s, wall_time_s_mean=math.nan, wall_time_s_std=math.nan)
            writer.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])
    return summary
