"""Gap filling for cloud-covered categorical raster stacks.

Two matrix-completion engines are provided: iterated truncated SVD
(:func:`run_dineof`) and a regularized factorization fit by SGD
(:func:`run_funk_svd`), together with synthetic data, cloud masks,
F1 scoring and a blocking-rate benchmark.
"""

from .bench import BenchPlan, emit_report, run_bench
from .dineof import (
    DineofConfig,
    error_propagation_report,
    run_dineof,
    svd_split,
    verify_truncation_identity,
)
from .evaluation import baseline_mode_fill, confusion, evaluate, f1_scores, timed_fill
from .funksvd import FactorModel, FunkConfig, round_to_class, run_funk_svd
from .masking import (
    CloudBank,
    MaskMatrix,
    apply_mask,
    blocking_rate,
    frame_mask,
    mask_from_stack,
    synthesize_cloud,
)
from .rasterstack import ClassLabel, GridStack, class_fractions, read_stack, write_stack
from .synth import SynthConfig, generate_landscape, generate_lowrank_numeric

__version__ = "0.1.0"
