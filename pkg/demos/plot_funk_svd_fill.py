"""
Filling with a latent factor model
==================================

Funk-SVD learns frame and pixel factors from the observed entries only.
The objective should fall over the epochs.
"""

from coastfill import (
    FunkConfig,
    SynthConfig,
    apply_mask,
    evaluate,
    frame_mask,
    generate_landscape,
    round_to_class,
    run_funk_svd,
    synthesize_cloud,
)

truth = generate_landscape(SynthConfig(seed=1, frames=30, rows=32, cols=32))
mask = frame_mask(truth, 0, synthesize_cloud((32, 32), 0.3, seed=5))
cloudy = apply_mask(truth, mask)

raw, fit = run_funk_svd(cloudy, mask, FunkConfig(rank=8, epochs=60))
print("objective: start %.1f, end %.1f" % (fit.initial_objective, fit.objectives[-1]))

filled = round_to_class(raw, truth.rows, truth.cols)
rep = evaluate(filled, truth, mask)
print("macro F1 %.3f  accuracy %.3f" % (rep.macro_f1, rep.accuracy))
print("per-class F1:", [round(float(v), 3) for v in rep.per_class_f1])
