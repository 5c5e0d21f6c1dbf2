"""Categorical raster stacks and the GSF text format.

A stack holds ``M`` frames of an ``m x n`` raster as an ``M x N`` matrix
(``N = m * n``), one flattened frame per row. Frames are flattened in
row-major order, so horizontally adjacent pixels stay adjacent within a row
of the matrix while vertical neighbours end up ``n`` columns apart.

Missing (cloud or noise) pixels are tracked with a boolean ``missing`` array
rather than a sentinel value, so a continuous reconstruction may take any
real value.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ClassLabel",
    "CLASS_CODES",
    "GridStack",
    "StackHeader",
    "ShapeError",
    "DomainError",
    "GSFParseError",
    "flatten_frame",
    "unflatten_frame",
    "read_stack",
    "write_stack",
    "format_stack",
    "parse_stack",
    "class_fractions",
]

MAGIC = "GSF1"


class ClassLabel(enum.IntEnum):
    """Ordered landscape categories, from wettest to driest."""

    WATER = 1
    WETLAND = 2
    LAND = 3


CLASS_CODES = tuple(int(c) for c in ClassLabel)


class ShapeError(ValueError):
    """Array dimensions do not agree."""


class DomainError(ValueError):
    """A value lies outside the domain an operation accepts."""


class GSFParseError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridStack:
    """``M`` frames of an ``rows x cols`` raster stored as an ``M x N`` matrix.

    Parameters
    ----------
    values : ndarray, shape (M, N)
        Real values. Entries flagged missing are stored as 0 and carry no
        meaning.
    missing : ndarray of bool, shape (M, N)
        True where the pixel is absent.
    rows, cols : int
        Frame dimensions, ``rows * cols == N``.
    """

    values: np.ndarray
    missing: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        missing = np.asarray(self.missing, dtype=bool)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D (M, N), got shape {values.shape}")
        if missing.shape != values.shape:
            raise ShapeError(
                f"missing flags have shape {missing.shape}, expected {values.shape}"
            )
        rows, cols = int(self.rows), int(self.cols)
        if rows < 1 or cols < 1 or rows * cols != values.shape[1]:
            raise ShapeError(
                f"frame dims {rows}x{cols} do not match N={values.shape[1]}"
            )
        present = values[~missing]
        if not np.all(np.isfinite(present)):
            raise DomainError("present values must be finite")
        values = np.where(missing, 0.0, values)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "missing", _readonly(missing))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_array(cls, data, rows=None, cols=None):
        """Build a stack from an ``(M, N)`` or ``(M, m, n)`` array with NaN holes."""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 3:
            frames, r, c = data.shape
            if (rows is not None and rows != r) or (cols is not None and cols != c):
                raise ShapeError(f"expected frames of {rows}x{cols}, got {r}x{c}")
            rows, cols = r, c
            data = data.reshape(frames, r * c)
        elif data.ndim == 2:
            if rows is None and cols is None:
                rows, cols = 1, data.shape[1]
            elif rows is None:
                rows = data.shape[1] // cols
            elif cols is None:
                cols = data.shape[1] // rows
        else:
            raise ShapeError(f"expected a 2-D or 3-D array, got {data.ndim}-D")
        missing = np.isnan(data)
        return cls(np.where(missing, 0.0, data), missing, rows, cols)

    @classmethod
    def from_frames(cls, frames):
        """Stack a sequence of ``m x n`` grids (NaN or None for missing)."""
        grids = [np.array(f, dtype=np.float64) for f in frames]
        if not grids:
            raise ShapeError("at least one frame is required")
        rows, cols = grids[0].shape
        vectors = [flatten_frame(g, rows, cols) for g in grids]
        return cls.from_array(np.vstack(vectors), rows, cols)

    @property
    def frames(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_pixels(self):
        return self.values.shape[1]

    @property
    def header(self):
        return StackHeader(self.frames, self.rows, self.cols)

    @property
    def is_categorical(self):
        present = self.values[~self.missing]
        return bool(np.all(np.isin(present, CLASS_CODES)))

    def to_array(self):
        """``(M, N)`` float copy with NaN at missing entries."""
        out = np.array(self.values, dtype=np.float64)
        out[self.missing] = np.nan
        return out

    def frame(self, index):
        """The ``index``-th frame as an ``rows x cols`` grid (NaN for missing)."""
        return unflatten_frame(self.to_array()[index], self.rows, self.cols)

    def with_values(self, values, missing=None):
        """New stack with the same frame dims and replaced contents."""
        if missing is None:
            missing = np.zeros(np.shape(values), dtype=bool)
        return GridStack(values, missing, self.rows, self.cols)

    def equals(self, other):
        return (
            isinstance(other, GridStack)
            and self.shape == other.shape
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.missing, other.missing)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return (
            f"GridStack(frames={self.frames}, rows={self.rows}, cols={self.cols}, "
            f"missing={int(self.missing.sum())})"
        )


@dataclass(frozen=True)
class StackHeader:
    frames: int
    rows: int
    cols: int
    magic: str = MAGIC

    def format(self):
        return f"{self.magic} {self.frames} {self.rows} {self.cols}"


def flatten_frame(frame, rows=None, cols=None):
    """Flatten an ``m x n`` grid to a length ``m * n`` vector in row-major order.

    Missing cells (NaN or None) stay missing in the output.
    """
    grid = np.array(frame, dtype=np.float64)
    if grid.ndim != 2:
        raise ShapeError(f"frame must be 2-D, got {grid.ndim}-D")
    expected = (
        rows if rows is not None else grid.shape[0],
        cols if cols is not None else grid.shape[1],
    )
    if grid.shape != expected:
        raise ShapeError(f"expected frame of {expected[0]}x{expected[1]}, got {grid.shape[0]}x{grid.shape[1]}")
    return grid.reshape(-1)


def unflatten_frame(row, rows, cols):
    vec = np.array(row, dtype=np.float64)
    if vec.ndim != 1 or vec.size != rows * cols:
        raise ShapeError(f"expected a vector of length {rows * cols} ({rows}x{cols}), got shape {vec.shape}")
    return vec.reshape(rows, cols)


# -- GSF text format --------------------------------------------------------

_INT = re.compile(r"[+-]?\d+")
_REAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def _format_value(x):
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_stack(stack):
    """Render a stack as GSF text (LF line endings, blank line between frames)."""
    lines = [stack.header.format()]
    for f in range(stack.frames):
        if f:
            lines.append("")
        vals = stack.values[f].reshape(stack.rows, stack.cols)
        miss = stack.missing[f].reshape(stack.rows, stack.cols)
        for r in range(stack.rows):
            lines.append(
                " ".join(
                    "NA" if miss[r, c] else _format_value(vals[r, c])
                    for c in range(stack.cols)
                )
            )
    return "\n".join(lines) + "\n"


def _parse_token(tok, lineno):
    if tok == "NA":
        return np.nan
    if _INT.fullmatch(tok):
        return float(int(tok))
    if _REAL.fullmatch(tok):
        return float(tok)
    raise GSFParseError(f"invalid token {tok!r}", lineno)


def parse_stack(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GSFParseError("empty file", 1)
    head = lines[0].split()
    if not head or head[0] != MAGIC:
        raise GSFParseError(f"bad magic, expected {MAGIC!r}", 1)
    if len(head) != 4 or not all(_INT.fullmatch(t) for t in head[1:]):
        raise GSFParseError("header must be 'GSF1 <M> <m> <n>'", 1)
    frames, rows, cols = (int(t) for t in head[1:])
    if frames < 1 or rows < 1 or cols < 1:
        raise GSFParseError("dimensions must be positive", 1)

    data = np.empty((frames, rows * cols))
    lineno = 1
    pos = 1
    for f in range(frames):
        if f:
            # one blank separator line between frames
            if pos < len(lines) and lines[pos].strip() == "":
                pos += 1
        for r in range(rows):
            lineno = pos + 1
            if pos >= len(lines):
                raise GSFParseError(
                    f"unexpected end of file: header declares {frames} frames of "
                    f"{rows} rows, data ended in frame {f} row {r}",
                    lineno,
                )
            toks = lines[pos].split()
            if len(toks) != cols:
                raise GSFParseError(f"expected {cols} tokens, got {len(toks)}", lineno)
            data[f, r * cols:(r + 1) * cols] = [_parse_token(t, lineno) for t in toks]
            pos += 1
    rest = [i for i in range(pos, len(lines)) if lines[i].strip()]
    if rest:
        raise GSFParseError(
            f"trailing data after {frames} declared frames", rest[0] + 1
        )
    return GridStack.from_array(data, rows, cols)


def read_stack(path):
    """Read a GSF file into a :class:`GridStack`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_stack(fh.read())


def write_stack(stack, path):
    Path(path).write_text(format_stack(stack), encoding="utf-8", newline="\n")


def class_fractions(stack):
    """Per-frame fractions of water, wetland, land and missing pixels.

    Returns
    -------
    ndarray, shape (M, 4)
        Columns are water, wetland, land, missing; each row sums to 1.
    """
    if not stack.is_categorical:
        raise DomainError("class_fractions requires a categorical stack")
    n = stack.n_pixels
    present = ~stack.missing
    cols = [((stack.values == c) & present).sum(axis=1) for c in CLASS_CODES]
    cols.append(stack.missing.sum(axis=1))
    return np.column_stack(cols) / n
