"""Dyadic fractional maximal operator, the truncated sequence psi_n, and a
brute-force maximal function over all grid-aligned cubes.

The root cube has measure 1, so a level-``n`` cube contributes
``2**(-n*alpha) * avg(f, Q)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dyadic import FUNCTION, DyadicGrid, GridFunction, build_pyramid, upsample

#: Work budget (cells x windows) for the grid-aligned enumeration.
BRUTEFORCE_BUDGET = 3e8


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MaximalResult:
    grid: DyadicGrid
    values: np.ndarray
    alpha: float
    depth_used: int
    family: str = "dyadic"

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values, FUNCTION)


def _check_alpha(alpha: float, d: int) -> None:
    if not 0 <= alpha < d:
        raise ValueError(f"alpha must lie in [0, {d}), got {alpha}")


def dyadic_fractional_maximal(f: GridFunction, alpha: float = 0.0) -> MaximalResult:
    """Dyadic fractional maximal function of ``f`` restricted to the root cube.

    One top-down pass: the running maximum at level ``n`` is the parent's
    running maximum against ``2**(-n*alpha)`` times the level-``n`` average.
    """
    _check_alpha(alpha, f.d)
    pyr = build_pyramid(f)
    running = pyr.levels[0].copy()
    for n in range(1, f.depth + 1):
        running = np.maximum(upsample(running, 1), 2.0 ** (-n * alpha) * pyr.levels[n])
    return MaximalResult(f.grid, running.reshape(-1), float(alpha), f.depth)


def psi_sequence(f: GridFunction, alpha: float, n: int) -> GridFunction:
    """``max(phi_0, 2**-alpha phi_1, ..., 2**(-n alpha) phi_n)`` on finest cells."""
    _check_alpha(alpha, f.d)
    f.grid.check_level(n)
    pyr = build_pyramid(f)
    terms = [2.0 ** (-k * alpha) * pyr.on_finest(k) for k in range(n + 1)]
    return GridFunction(f.grid, np.max(terms, axis=0), FUNCTION)


def window_work(side: int, d: int) -> float:
    return float(sum((side - k + 1) ** d * k ** d for k in range(1, side + 1)))


def grid_aligned_maximal_bruteforce(f: GridFunction, alpha: float = 0.0,
                                    budget: float = BRUTEFORCE_BUDGET) -> MaximalResult:
    """Maximal function over every axis-parallel cube with corners on the finest grid.

    Stands in for the non-dyadic operator.  Each window average is taken
    directly over its cells, then spread to every cell it covers.
    """
    _check_alpha(alpha, f.d)
    if f.d > 2:
        raise InstanceTooLarge("grid-aligned enumeration supports d <= 2")
    side = 2 ** f.depth
    if 2 * window_work(side, f.d) > budget:
        raise InstanceTooLarge(
            f"grid-aligned enumeration at d={f.d}, depth={f.depth} exceeds the work budget"
        )
    arr = f.array()
    best = np.zeros(arr.shape)
    for k in range(1, side + 1):
        avgs = window_means(arr, k)
        scaled = (k / side) ** alpha * avgs
        padded = np.pad(scaled, [(k - 1, k - 1)] * f.d, constant_values=-np.inf)
        covering = sliding_window_view(padded, (k,) * f.d)
        best = np.maximum(best, covering.max(axis=tuple(range(f.d, 2 * f.d))))
    return MaximalResult(f.grid, best.reshape(-1), float(alpha), f.depth, "grid_aligned")


def window_means(arr: np.ndarray, k: int) -> np.ndarray:
    """Means over every ``k``-cell cube window of a d-dimensional cell array."""
    win = sliding_window_view(arr, (k,) * arr.ndim)
    return win.mean(axis=tuple(range(arr.ndim, 2 * arr.ndim)))
