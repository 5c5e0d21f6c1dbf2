"""
A small sweep over cloud rates
==============================

Both engines and the temporal-mode baseline see the same masks. The full
default sweep lives behind ``coastfill bench``; this one is sized to run in
a few seconds.
"""

import warnings

from coastfill import BenchPlan, DineofConfig, FunkConfig, SynthConfig, generate_landscape
from coastfill.bench import run_bench, summarize

stack = generate_landscape(SynthConfig(seed=2, frames=20, rows=24, cols=24))
plan = BenchPlan(
    rates=(0.1, 0.3, 0.5),
    seeds=(1, 2, 3),
    dineof=DineofConfig(rank=6),
    funk=FunkConfig(rank=6, epochs=40),
)

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    rows = run_bench(stack, plan)

for s in summarize(rows):
    print(f"rate {s['rate']:.2f}  {s['method']:9s}  macro F1 {s['macro_f1_mean']:.3f}"
          f" +/- {s['macro_f1_std']:.3f}")
