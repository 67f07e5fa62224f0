"""Dyadic grids over the unit cube and conditional-expectation pyramids.

Every function handled by the package is piecewise constant on the finest
cells of a :class:`DyadicGrid`.  Cells are half-open products of intervals
and are stored row-major by coordinate, so a grid function of depth ``N`` in
dimension ``d`` reshapes to a ``(2**N,) * d`` array.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FUNCTION = "function"
WEIGHT = "weight"


class GridError(ValueError):
    """Structural problem with a grid, a grid function or a cube address."""


@dataclass(frozen=True)
class DyadicGrid:
    d: int
    depth: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise GridError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.depth) != self.depth or self.depth < 0:
            raise GridError(f"depth must be a nonnegative integer, got {self.depth!r}")

    def side(self, level: int) -> int:
        return 2 ** level

    def n_cells(self, level: int | None = None) -> int:
        level = self.depth if level is None else level
        return 2 ** (level * self.d)

    def shape(self, level: int | None = None) -> tuple[int, ...]:
        level = self.depth if level is None else level
        return (2 ** level,) * self.d

    def cell_measure(self, level: int) -> float:
        return 2.0 ** (-level * self.d)

    def check_level(self, level: int) -> None:
        if not 0 <= level <= self.depth:
            raise GridError(f"level {level} outside [0, {self.depth}]")

    def parent_index(self, level: int, index: int) -> int:
        """Index of the level-``level - 1`` cube containing cube ``(level, index)``."""
        self.check_level(level)
        if level == 0:
            raise GridError("the root cube has no parent")
        coords = np.unravel_index(index, self.shape(level))
        return int(np.ravel_multi_index(tuple(c // 2 for c in coords), self.shape(level - 1)))

    def children(self, level: int, index: int) -> list[int]:
        """Indices of the ``2**d`` children of cube ``(level, index)``, in row-major order."""
        self.check_level(level)
        if level == self.depth:
            raise GridError("finest cells have no children inside the grid")
        coords = np.unravel_index(index, self.shape(level))
        offsets = np.array(np.unravel_index(np.arange(2 ** self.d), (2,) * self.d))
        child = 2 * np.asarray(coords)[:, None] + offsets
        return [int(i) for i in np.ravel_multi_index(tuple(child), self.shape(level + 1))]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on the finest cells of ``grid``.

    In ``"function"`` mode the absolute value is taken on ingest; in
    ``"weight"`` mode every cell must be strictly positive.
    """

    grid: DyadicGrid
    values: np.ndarray
    mode: str = FUNCTION

    def __post_init__(self):
        if self.mode not in (FUNCTION, WEIGHT):
            raise GridError(f"unknown mode {self.mode!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            vals = vals.reshape(-1)
        if vals.size != self.grid.n_cells():
            raise GridError(
                f"expected {self.grid.n_cells()} values for d={self.grid.d}, "
                f"depth={self.grid.depth}; got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("values must be finite")
        if self.mode == WEIGHT:
            if np.any(vals <= 0):
                raise GridError("weight values must be strictly positive")
        else:
            vals = np.abs(vals)
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def depth(self) -> int:
        return self.grid.depth

    def array(self) -> np.ndarray:
        """Values reshaped to the ``(2**N,) * d`` cell array."""
        return self.values.reshape(self.grid.shape())

    def mean(self) -> float:
        return float(self.values.mean())

    def with_values(self, values, mode: str | None = None) -> GridFunction:
        return GridFunction(self.grid, values, self.mode if mode is None else mode)

    def to_document(self) -> dict:
        return {
            "d": self.grid.d,
            "depth": self.grid.depth,
            "mode": self.mode,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_document(cls, doc: dict) -> GridFunction:
        try:
            grid = DyadicGrid(int(doc["d"]), int(doc["depth"]))
            values = doc["values"]
        except (KeyError, TypeError) as exc:
            raise GridError(f"malformed grid function document: {exc}") from exc
        if not isinstance(values, list):
            raise GridError("'values' must be a list")
        try:
            arr = np.array(values, dtype=float)
        except (TypeError, ValueError) as exc:
            raise GridError(f"non-numeric values: {exc}") from exc
        return cls(grid, arr, doc.get("mode", FUNCTION))


def constant(grid: DyadicGrid, value: float, mode: str = FUNCTION) -> GridFunction:
    return GridFunction(grid, np.full(grid.n_cells(), float(value)), mode)


def from_values(values, d: int = 1, mode: str = FUNCTION) -> GridFunction:
    """Build a grid function from a flat value list, inferring the depth."""
    values = np.asarray(values, dtype=float).reshape(-1)
    depth = round(math.log2(values.size) / d) if values.size else -1
    if depth < 0 or 2 ** (depth * d) != values.size:
        raise GridError(f"{values.size} values do not fill a dyadic grid in dimension {d}")
    return GridFunction(DyadicGrid(d, depth), values, mode)


def load_grid_function(path) -> GridFunction:
    text = Path(path).read_text()
    # json accepts NaN/Infinity literals; GridFunction rejects them afterwards
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GridError(f"{path}: not a valid document ({exc})") from exc
    return GridFunction.from_document(doc)


def _coarsen(arr: np.ndarray, reduce) -> np.ndarray:
    """Apply ``reduce`` over each block of ``2**d`` sibling cells."""
    d = arr.ndim
    half = arr.shape[0] // 2
    blocks = arr.reshape(sum(((half, 2) for _ in range(d)), ()))
    return reduce(blocks, axis=tuple(range(1, 2 * d, 2)))


def _sibling_mean(blocks: np.ndarray, axis) -> np.ndarray:
    return blocks.mean(axis=axis)


def _sibling_logmeanexp(blocks: np.ndarray, axis) -> np.ndarray:
    top = blocks.max(axis=axis, keepdims=True)
    out = top + np.log(np.exp(blocks - top).mean(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def upsample(arr: np.ndarray, times: int) -> np.ndarray:
    """Repeat every cell of a level array ``2**times`` times along each axis."""
    if times == 0:
        return arr
    k = 2 ** times
    for ax in range(arr.ndim):
        arr = np.repeat(arr, k, axis=ax)
    return arr


@dataclass(frozen=True, eq=False)
class AveragePyramid:
    """Per-level dyadic averages of a grid function; ``levels[n]`` has shape ``(2**n,) * d``."""

    grid: DyadicGrid
    levels: tuple

    def level(self, n: int) -> np.ndarray:
        """Flat row-major cell averages at level ``n``."""
        self.grid.check_level(n)
        return self.levels[n].reshape(-1)

    def on_finest(self, n: int) -> np.ndarray:
        """Level-``n`` averages spread over finest cells (the function ``phi_n``)."""
        self.grid.check_level(n)
        return upsample(self.levels[n], self.grid.depth - n).reshape(-1)


def _pyramid(grid: DyadicGrid, finest: np.ndarray, reduce) -> tuple:
    levels = [finest.reshape(grid.shape())]
    for _ in range(grid.depth):
        levels.append(_coarsen(levels[-1], reduce))
    return tuple(reversed(levels))


def build_pyramid(f: GridFunction) -> AveragePyramid:
    """Dyadic conditional expectations of ``f`` at every level 0..N.

    Each level is the mean of the ``2**d`` children on the level below, so the
    accumulation is a tree summation.  Level N is the input itself.
    """
    return AveragePyramid(f.grid, _pyramid(f.grid, np.array(f.values), _sibling_mean))


def log_average_pyramid(grid: DyadicGrid, log_values: np.ndarray) -> AveragePyramid:
    """Pyramid of ``log(avg(exp(log_values)))`` over dyadic cubes, overflow-safe."""
    return AveragePyramid(grid, _pyramid(grid, np.asarray(log_values, dtype=float), _sibling_logmeanexp))


def cube_average(f: GridFunction, level: int, index: int) -> float:
    """Mean of ``f`` over the dyadic cube at ``(level, index)``."""
    f.grid.check_level(level)
    if not 0 <= index < f.grid.n_cells(level):
        raise GridError(f"index {index} outside level {level} (has {f.grid.n_cells(level)} cubes)")
    coords = np.unravel_index(index, f.grid.shape(level))
    k = 2 ** (f.depth - level)
    window = f.array()[tuple(slice(c * k, (c + 1) * k) for c in coords)]
    # reuse the pyramid reduction order for consistency with build_pyramid
    sub = GridFunction(DyadicGrid(f.d, f.depth - level), window.reshape(-1), f.mode)
    return float(build_pyramid(sub).level(0)[0])


def conjugate_weight(w: GridFunction, r: float) -> GridFunction:
    """Cell-wise ``w**(-1/(r-1))``."""
    if w.mode != WEIGHT:
        raise GridError("conjugate_weight expects a weight-mode grid function")
    if not r > 1:
        raise ValueError(f"exponent must exceed 1, got {r}")
    return GridFunction(w.grid, np.power(w.values, -1.0 / (r - 1.0)), WEIGHT)
