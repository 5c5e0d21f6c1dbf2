"""Synthetic coastal landscape stacks.

Each frame thresholds a fixed, spatially smooth elevation field against a
water level that oscillates over time. Pixels below the level are water, a
band above it is wetland and everything higher is land. A second smooth
field modulates how strongly each pixel responds to the seasonal cycle, so
the shoreline does not simply move in lock-step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .rasterstack import GridStack

__all__ = [
    "SynthConfig",
    "CalibrationError",
    "generate_landscape",
    "generate_lowrank_numeric",
]


class CalibrationError(RuntimeError):
    """No threshold reaches the requested water fraction."""


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    frames: int = 60
    rows: int = 64
    cols: int = 64
    water_target: float = 0.7
    seasonal_amplitude: float = 0.5
    smoothness: int = 4
    wetland_band: float = 0.35
    level_noise: float = 0.2
    periods: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.water_target < 1.0:
            raise ValueError(f"water_target must lie in (0, 1), got {self.water_target}")
        if min(self.frames, self.rows, self.cols) < 1:
            raise ValueError("frames, rows and cols must be >= 1")
        if self.seasonal_amplitude < 0:
            raise ValueError("seasonal_amplitude must be >= 0")
        if self.smoothness < 0:
            raise ValueError("smoothness must be >= 0")
        if self.wetland_band < 0:
            raise ValueError("wetland_band must be >= 0")


def _smooth_field(rng, shape, radius):
    field = rng.standard_normal(shape)
    if radius > 0:
        field = ndimage.gaussian_filter(field, sigma=radius, mode="reflect")
    std = field.std()
    field = field - field.mean()
    return field / std if std > 0 else field


def generate_landscape(config=SynthConfig(), max_bisect=50):
    """Generate a fully observed categorical stack.

    The base water level is found by bisection so that the water fraction,
    averaged over all frames, is within 0.05 of ``config.water_target``.
    Identical configs give bitwise-identical stacks.
    """
    rng = np.random.default_rng(config.seed)
    shape = (config.rows, config.cols)
    elevation = _smooth_field(rng, shape, config.smoothness).ravel()
    response = _smooth_field(rng, shape, config.smoothness + 2).ravel()
    noise = rng.standard_normal(config.frames)

    t = np.arange(config.frames)
    period = config.frames / config.periods
    phase = 2.0 * np.pi * t / period
    amp = config.seasonal_amplitude
    level_offset = amp * (np.sin(phase) + config.level_noise * noise)
    # spatially varying seasonal response; vanishes with the amplitude
    local = 0.5 * amp * np.outer(np.cos(phase), response)
    surface = elevation[None, :] - local

    def water_fraction(base):
        level = (base + level_offset)[:, None]
        return float((surface < level).mean())

    lo = float(surface.min() - abs(level_offset).max() - 1.0)
    hi = float(surface.max() + abs(level_offset).max() + 1.0)
    base = 0.5 * (lo + hi)
    frac = water_fraction(base)
    for _ in range(max_bisect):
        if abs(frac - config.water_target) < 0.005:
            break
        if frac < config.water_target:
            lo = base
        else:
            hi = base
        base = 0.5 * (lo + hi)
        frac = water_fraction(base)
    if abs(frac - config.water_target) > 0.05:
        raise CalibrationError(
            f"water fraction {frac:.3f} cannot reach target {config.water_target} "
            f"after {max_bisect} bisection steps"
        )

    level = (base + level_offset)[:, None]
    labels = np.full(surface.shape, 3.0)
    labels[surface < level + config.wetland_band] = 2.0
    labels[surface < level] = 1.0
    return GridStack(labels, np.zeros(labels.shape, dtype=bool), config.rows, config.cols)


def generate_lowrank_numeric(seed, M, N, rank):
    """Random ``M x N`` matrix of exact rank ``rank`` (product of Gaussian factors)."""
    if not 1 <= rank <= min(M, N):
        raise ValueError(f"rank must lie in [1, min(M, N)] = [1, {min(M, N)}], got {rank}")
    rng = np.random.default_rng(seed)
    left = rng.standard_normal((M, rank))
    right = rng.standard_normal((rank, N))
    return left @ right
