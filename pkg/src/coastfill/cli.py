"""Command-line entry point: ``coastfill {synth,mask,fill,eval,bench}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings

import numpy as np

from .bench import BenchPlan, emit_report, run_bench
from .dineof import DineofConfig, run_dineof
from .evaluation import evaluate
from .funksvd import FunkConfig, round_to_class, run_funk_svd
from .masking import MaskMatrix, apply_mask, frame_mask, mask_from_stack, synthesize_cloud
from .rasterstack import ClassLabel, GridStack, read_stack, write_stack
from .synth import SynthConfig, generate_landscape

logger = logging.getLogger("coastfill")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _num(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def parse_rates(text):
    """``"a:b:step"`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(t) for t in text.split(",") if t]


def cmd_synth(args):
    config = SynthConfig(
        seed=args.seed,
        frames=args.frames,
        rows=args.rows,
        cols=args.cols,
        water_target=args.water,
        seasonal_amplitude=args.amplitude,
        smoothness=args.smoothness,
    )
    write_stack(generate_landscape(config), args.out)


def cmd_mask(args):
    stack = read_stack(args.input)
    cloud = synthesize_cloud((stack.rows, stack.cols), args.rate, args.seed)
    mask = frame_mask(stack, args.frame, cloud)
    write_stack(apply_mask(stack, mask), args.out)
    if args.mask_out:
        write_stack(mask.to_stack(), args.mask_out)


def _load_mask(stack, path):
    mask = mask_from_stack(stack)
    if path:
        mask = mask.union(MaskMatrix.from_stack(read_stack(path)))
    return mask


def cmd_fill(args):
    stack = read_stack(args.input)
    mask = _load_mask(stack, args.mask)
    truth = read_stack(args.truth) if args.truth else None
    if args.method == "dineof":
        config = DineofConfig(rank=args.rank, tol=args.tol, max_iter=args.max_iter, init=args.init)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            raw, trace = run_dineof(stack, mask, config, truth=truth)
        for w in caught:
            logger.warning("%s", w.message)
        if args.trace:
            _write_csv(
                args.trace,
                ["iter", "rel_change", "remainder_missing_fro", "error_missing_fro"],
                [
                    [r.iteration, _num(r.rel_change), _num(r.remainder_missing_fro),
                     _num(r.error_missing_fro)]
                    for r in trace.records
                ],
            )
    else:
        config = FunkConfig(
            rank=args.rank, lam=args.lam, learning_rate=args.lr,
            epochs=args.epochs, seed=args.seed, init_scale=args.init_scale,
        )
        raw, report = run_funk_svd(stack, mask, config)
        if args.report:
            _write_csv(
                args.report,
                ["epoch", "objective"],
                [[i + 1, _num(v)] for i, v in enumerate(report.objectives)],
            )
    write_stack(round_to_class(raw, stack.rows, stack.cols), args.out)
    if args.raw_out:
        write_stack(GridStack(raw, np.zeros(raw.shape, dtype=bool), stack.rows, stack.cols), args.raw_out)


def cmd_eval(args):
    pred = read_stack(args.pred)
    truth = read_stack(args.truth)
    mask = MaskMatrix.from_stack(read_stack(args.mask)) if args.mask else None
    report = evaluate(pred, truth, mask, full_frame=args.full_frame)
    cm = report.confusion.astype(float)
    rows = []
    for c, label in enumerate(ClassLabel):
        col, row = cm[:, c].sum(), cm[c, :].sum()
        precision = cm[c, c] / col if col else 0.0
        recall = cm[c, c] / row if row else 0.0
        rows.append([
            report.scope, label.name.lower(), _num(precision), _num(recall),
            _num(report.per_class_f1[c]), _num(report.macro_f1),
            _num(report.micro_f1), _num(report.accuracy), "", "",
        ])
    _write_csv(
        args.out,
        ["scope", "class", "precision", "recall", "f1", "macro_f1", "micro_f1",
         "accuracy", "wall_time_s", "iterations"],
        rows,
    )


def cmd_bench(args):
    stack = read_stack(args.input)
    plan = BenchPlan(
        rates=tuple(parse_rates(args.rates)),
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        seeds=tuple(int(s) for s in args.seeds.split(",") if s),
        truth_frame=args.truth_frame,
        dineof=DineofConfig(rank=args.rank, tol=args.tol, max_iter=args.max_iter, init=args.init),
        funk=FunkConfig(
            rank=args.rank, lam=args.lam, learning_rate=args.lr,
            epochs=args.epochs, seed=args.funk_seed, init_scale=args.init_scale,
        ),
    )
    results = run_bench(stack, plan, workers=args.workers)
    emit_report(results, args.out, include_timing=args.timing)


def _add_engine_args(p, funk_seed_flag="--seed"):
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--init", choices=("zero", "mean"), default="zero",
                   help="DINEOF initial value for missing entries (mean is an extension)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument(funk_seed_flag, dest="seed" if funk_seed_flag == "--seed" else "funk_seed",
                   type=int, default=42)
    p.add_argument("--init-scale", type=float, default=0.1)


def build_parser():
    parser = argparse.ArgumentParser(prog="coastfill", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic coastal stack")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--water", type=float, default=0.7)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--smoothness", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mask", help="paste a synthetic cloud onto one frame")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("fill", help="fill missing entries")
    p.add_argument("--method", choices=("dineof", "funk-svd"), required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mask")
    p.add_argument("--out", required=True)
    p.add_argument("--raw-out")
    p.add_argument("--truth")
    p.add_argument("--trace", help="DINEOF per-iteration CSV")
    p.add_argument("--report", help="Funk-SVD per-epoch objective CSV")
    _add_engine_args(p)
    p.set_defaults(func=cmd_fill)

    p = sub.add_parser("eval", help="score a filled stack against the truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--mask")
    p.add_argument("--full-frame", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="blocking-rate sweep over all methods")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--truth-frame", type=int, default=0)
    p.add_argument("--rates", default="0.05:0.5:0.05")
    p.add_argument("--methods", default="dineof,funk-svd,baseline")
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall times (makes the CSV differ between runs)")
    p.add_argument("--out", required=True)
    _add_engine_args(p, funk_seed_flag="--funk-seed")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        logger.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
