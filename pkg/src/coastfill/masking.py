"""Missing-data indicators and synthetic cloud masks."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .rasterstack import GridStack, ShapeError

__all__ = [
    "MaskMatrix",
    "CloudBank",
    "SynthesisError",
    "mask_from_stack",
    "synthesize_cloud",
    "apply_mask",
    "blocking_rate",
    "frame_mask",
    "RATE_TOLERANCE",
]

RATE_TOLERANCE = 0.005

_FOUR = ndimage.generate_binary_structure(2, 1)


class SynthesisError(RuntimeError):
    """A cloud mask could not hit its target blocking rate."""


@dataclass(frozen=True, eq=False)
class MaskMatrix:
    """Binary ``M x N`` indicator, True (1) where an entry is missing."""

    bits: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[1] != self.rows * self.cols:
            raise ShapeError(
                f"mask of shape {bits.shape} does not fit frames of {self.rows}x{self.cols}"
            )
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def empty(cls, frames, rows, cols):
        return cls(np.zeros((frames, rows * cols), dtype=bool), rows, cols)

    @classmethod
    def from_stack(cls, stack):
        """Interpret a 0/1 GSF stack as a mask."""
        vals = stack.values
        if stack.missing.any() or not np.all(np.isin(vals, (0.0, 1.0))):
            raise ValueError("mask files may only contain 0 and 1")
        return cls(vals == 1.0, stack.rows, stack.cols)

    @property
    def shape(self):
        return self.bits.shape

    def to_stack(self):
        return GridStack(
            self.bits.astype(np.float64),
            np.zeros(self.bits.shape, dtype=bool),
            self.rows,
            self.cols,
        )

    def union(self, other):
        _check_dims(self.bits.shape, other.bits.shape)
        return MaskMatrix(self.bits | other.bits, self.rows, self.cols)

    def checksum(self):
        """Short SHA-256 digest of the bit pattern and its shape."""
        h = hashlib.sha256()
        h.update(np.asarray(self.bits.shape, dtype=np.int64).tobytes())
        h.update(np.packbits(self.bits).tobytes())
        return h.hexdigest()[:16]

    def equals(self, other):
        return self.bits.shape == other.bits.shape and np.array_equal(self.bits, other.bits)


@dataclass
class CloudBank:
    """A collection of 4-connected cloud blobs, each an ``m x n`` boolean array."""

    shapes: list = field(default_factory=list)

    def __post_init__(self):
        shapes = [np.asarray(s, dtype=bool) for s in self.shapes]
        for i, s in enumerate(shapes):
            _, n = ndimage.label(s, structure=_FOUR)
            if n != 1:
                raise ValueError(f"blob {i} has {n} 4-connected components, expected 1")
        self.shapes = shapes

    @classmethod
    def harvest(cls, stack, min_size=10):
        """Collect the 4-connected missing regions of every frame of ``stack``."""
        blobs = []
        for f in range(stack.frames):
            grid = stack.missing[f].reshape(stack.rows, stack.cols)
            labels, n = ndimage.label(grid, structure=_FOUR)
            for lab in range(1, n + 1):
                blob = labels == lab
                if blob.sum() >= min_size:
                    blobs.append(blob)
        return cls(blobs)

    def __len__(self):
        return len(self.shapes)


def _check_dims(expected, actual):
    if tuple(expected) != tuple(actual):
        raise ShapeError(f"dimension mismatch: expected {tuple(expected)}, got {tuple(actual)}")


def mask_from_stack(stack):
    """The indicator K of a stack: 1 exactly where an entry is missing."""
    return MaskMatrix(stack.missing, stack.rows, stack.cols)


def frame_mask(stack, frame_index, cloud):
    """Lift a single-frame ``m x n`` cloud onto frame ``frame_index`` of an empty stack mask."""
    cloud = np.asarray(cloud, dtype=bool)
    _check_dims((stack.rows, stack.cols), cloud.shape)
    bits = np.zeros(stack.shape, dtype=bool)
    bits[frame_index] = cloud.ravel()
    return MaskMatrix(bits, stack.rows, stack.cols)


def apply_mask(stack, mask):
    """Copy of ``stack`` with every masked entry set missing."""
    _check_dims(stack.shape, mask.bits.shape)
    return GridStack(stack.values, stack.missing | mask.bits, stack.rows, stack.cols)


def blocking_rate(mask):
    bits = mask.bits if isinstance(mask, MaskMatrix) else np.asarray(mask, dtype=bool)
    return float(bits.sum()) / bits.size if bits.size else 0.0


_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _free_neighbours(grid, r, c):
    m, n = grid.shape
    out = []
    for dr, dc in _STEPS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < m and 0 <= cc < n and not grid[rr, cc]:
            out.append((rr, cc))
    return out


class _Frontier:
    """Uncovered pixels bordering the current blob; O(1) add, remove and sample."""

    def __init__(self):
        self.items = []
        self.index = {}

    def add(self, p):
        if p not in self.index:
            self.index[p] = len(self.items)
            self.items.append(p)

    def discard(self, p):
        i = self.index.pop(p, None)
        if i is None:
            return
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.index[last] = i

    def sample(self, rng):
        return self.items[int(rng.integers(len(self.items)))]

    def __len__(self):
        return len(self.items)


def _grow_walk(grid, rng, target, max_steps):
    """Grow random-walk blobs on ``grid`` in place until ``target`` pixels are set.

    The walker moves to a random uncovered 4-neighbour and covers it. When it
    is boxed in it restarts from a random uncovered pixel bordering the
    current blob, and once the blob has reached its drawn size a new blob is
    seeded at a random uncovered pixel.
    """
    n = grid.shape[1]
    count = int(grid.sum())
    steps = 0
    lo = max(10, target // 8)
    hi = max(lo + 1, target // 2)

    def cover(p, frontier):
        grid[p] = True
        frontier.discard(p)
        for q in _free_neighbours(grid, *p):
            frontier.add(q)

    while count < target:
        free = np.flatnonzero(~grid)
        p = divmod(int(free[rng.integers(free.size)]), n)
        frontier = _Frontier()
        cover(p, frontier)
        count += 1
        size = 1
        target_size = int(rng.integers(lo, hi + 1))
        while count < target and size < target_size:
            steps += 1
            if steps > max_steps:
                raise SynthesisError(
                    f"reached {count}/{target} cloud pixels after {max_steps} growth steps"
                )
            nbrs = _free_neighbours(grid, *p)
            if nbrs:
                p = nbrs[int(rng.integers(len(nbrs)))]
            elif len(frontier):
                p = frontier.sample(rng)
            else:
                break
            cover(p, frontier)
            count += 1
            size += 1
    return grid


def _bfs_order(blob):
    """Pixels of a connected blob in breadth-first order from its first pixel."""
    pts = np.argwhere(blob)
    start = tuple(pts[0])
    seen = {start}
    order = [start]
    i = 0
    while i < len(order):
        r, c = order[i]
        i += 1
        for dr, dc in _STEPS:
            p = (r + dr, c + dc)
            if p not in seen and 0 <= p[0] < blob.shape[0] and 0 <= p[1] < blob.shape[1] and blob[p]:
                seen.add(p)
                order.append(p)
    return order


def _paste_bank(grid, rng, target, bank, max_steps):
    m, n = grid.shape
    count = int(grid.sum())
    steps = 0
    while count < target:
        steps += 1
        if steps > max_steps:
            raise SynthesisError(
                f"reached {count}/{target} cloud pixels after {max_steps} paste attempts"
            )
        blob = bank.shapes[rng.integers(len(bank))]
        pts = np.argwhere(blob)
        (r0, c0), (r1, c1) = pts.min(axis=0), pts.max(axis=0)
        h, w = r1 - r0 + 1, c1 - c0 + 1
        if h > m or w > n:
            continue
        dr = int(rng.integers(0, m - h + 1)) - r0
        dc = int(rng.integers(0, n - w + 1)) - c0
        for r, c in _bfs_order(blob):
            if count >= target:
                break
            rr, cc = r + dr, c + dc
            if not grid[rr, cc]:
                grid[rr, cc] = True
                count += 1
    return grid


def synthesize_cloud(frame_dims, target_rate, seed, bank=None):
    """Synthesize an ``m x n`` boolean cloud mask covering ``target_rate`` of the frame.

    Blobs from ``bank`` are pasted at random positions; with an empty or
    missing bank, random-walk blobs are grown instead. The last blob is
    truncated along its breadth-first order so the achieved rate lands on
    ``round(target_rate * m * n)`` pixels.

    Raises
    ------
    SynthesisError
        If the achieved rate is not within 0.005 of the target, or growth
        exceeds ``10 * m * n`` steps.
    """
    m, n = frame_dims
    if not 0.0 <= target_rate <= 1.0:
        raise ValueError(f"target_rate must lie in [0, 1], got {target_rate}")
    total = m * n
    target = int(np.floor(target_rate * total + 0.5))
    rng = np.random.default_rng(seed)
    grid = np.zeros((m, n), dtype=bool)
    max_steps = 10 * total
    if target > 0:
        if bank is not None and len(bank):
            _paste_bank(grid, rng, target, bank, max_steps)
        else:
            _grow_walk(grid, rng, target, max_steps)
    achieved = grid.sum() / total
    if abs(achieved - target_rate) > RATE_TOLERANCE:
        raise SynthesisError(
            f"achieved blocking rate {achieved:.4f} is outside {target_rate} "
            f"+/- {RATE_TOLERANCE} on a {m}x{n} frame"
        )
    return grid
