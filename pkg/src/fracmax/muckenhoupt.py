"""Muckenhoupt characteristics of piecewise-constant weights and weight generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import WEIGHT, DyadicGrid, GridFunction, log_average_pyramid, upsample
from .maximal import BRUTEFORCE_BUDGET, InstanceTooLarge, window_means, window_work

DYADIC = "dyadic"
GRID_ALIGNED = "grid_aligned"


@dataclass(frozen=True)
class WeightCharacteristic:
    """Supremum of ``avg(w) * avg(w**(-1/(p-1)))**(p-1)`` over a cube family.

    ``cube`` locates the maximiser: ``(level, index)`` for the dyadic family,
    ``(side_in_cells, corner)`` for the grid-aligned one.
    """

    p: float
    value: float
    family: str
    cube: tuple


def _check_weight(w: GridFunction) -> None:
    if w.mode != WEIGHT:
        raise ValueError("expected a weight-mode grid function")


def _dyadic_log_sup(grid: DyadicGrid, log_a: np.ndarray, log_b: np.ndarray, power: float):
    """Max over dyadic cubes of ``log avg(exp(log_a)) + power * log avg(exp(log_b))``.

    Ties go to the lowest level, then the lowest index.
    """
    pa = log_average_pyramid(grid, log_a)
    pb = log_average_pyramid(grid, log_b)
    best, where = -np.inf, (0, 0)
    for n in range(grid.depth + 1):
        vals = pa.level(n) + power * pb.level(n)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), (n, i)
    return best, where


def _window_log_means(log_vals: np.ndarray, k: int) -> np.ndarray:
    top = log_vals.max()
    return top + np.log(window_means(np.exp(log_vals - top), k))


def ap_characteristic(w: GridFunction, p: float, family: str = DYADIC) -> WeightCharacteristic:
    """A_p characteristic of ``w`` over dyadic or grid-aligned cubes inside the root.

    Averages are accumulated in the log domain, so exponents ``p`` close to 1
    (where ``w**(-1/(p-1))`` overflows) are handled.
    """
    _check_weight(w)
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    logw = np.log(w.array())
    conj = -logw / (p - 1.0)
    if family == DYADIC:
        best, where = _dyadic_log_sup(w.grid, logw, conj, p - 1.0)
        return WeightCharacteristic(float(p), float(np.exp(best)), DYADIC, where)
    if family != GRID_ALIGNED:
        raise ValueError(f"unknown cube family {family!r}")
    if w.d > 2 or 2 * window_work(2 ** w.depth, w.d) > BRUTEFORCE_BUDGET:
        raise InstanceTooLarge(f"grid-aligned characteristic too large at d={w.d}, depth={w.depth}")
    best, where = -np.inf, None
    for k in range(1, 2 ** w.depth + 1):
        vals = _window_log_means(logw, k) + (p - 1.0) * _window_log_means(conj, k)
        i = int(np.argmax(vals))
        if vals.flat[i] > best:
            best = float(vals.flat[i])
            where = (k, tuple(int(c) for c in np.unravel_index(i, vals.shape)))
    return WeightCharacteristic(float(p), float(np.exp(best)), GRID_ALIGNED, where)


def ap_value(w: GridFunction, p: float) -> float:
    return ap_characteristic(w, p).value


def fractional_alpha(p: float, q: float, d: int) -> float:
    """The ``alpha`` with ``1/q = 1/p - alpha/d``."""
    return d * (1.0 / p - 1.0 / q)


def mw_fractional_characteristic(w: GridFunction, p: float, q: float) -> float:
    """``sup_Q avg(w**q) * avg(w**(-p'))**(q/p')`` over dyadic cubes."""
    _check_weight(w)
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    alpha = fractional_alpha(p, q, w.d)
    if not (0 <= alpha < w.d and np.isfinite(q)) or q < p:
        raise ValueError(f"exponents p={p}, q={q} do not correspond to alpha in [0, {w.d})")
    pc = p / (p - 1.0)
    logw = np.log(w.array())
    best, _ = _dyadic_log_sup(w.grid, q * logw, -pc * logw, q / pc)
    return float(np.exp(best))


def gen_power_weight(delta: float, grid: DyadicGrid) -> GridFunction:
    """Exact cell means of ``x**delta`` on a one-dimensional grid."""
    if grid.d != 1:
        raise ValueError("power weights are one-dimensional")
    if not delta > -1:
        raise ValueError(f"delta must exceed -1, got {delta}")
    n = grid.n_cells()
    edges = np.arange(n + 1) / n
    e = delta + 1.0
    vals = (edges[1:] ** e - edges[:-1] ** e) / (e * (edges[1:] - edges[:-1]))
    return GridFunction(grid, vals, WEIGHT)


def gen_cascade_weight(grid: DyadicGrid, eta: float, seed: int) -> GridFunction:
    """Multiplicative cascade with child factors in ``[1-eta, 1+eta]`` renormalised to mean 1.

    Every node's children average exactly to the node, so the pyramid of the
    result is the cascade itself and the root average is 1.
    """
    if not 0 <= eta < 1:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    rng = np.random.default_rng(seed)
    d = grid.d
    level = np.ones((1,) * d)
    for n in range(grid.depth):
        factors = rng.uniform(1.0 - eta, 1.0 + eta, size=(2 ** (n * d), 2 ** d))
        factors /= factors.mean(axis=1, keepdims=True)
        # (node..., child...) -> interleave node and child axes -> level n+1 layout
        f = factors.reshape((2 ** n,) * d + (2,) * d)
        order = [ax for pair in zip(range(d), range(d, 2 * d)) for ax in pair]
        f = f.transpose(order).reshape((2 ** (n + 1),) * d)
        level = upsample(level, 1) * f
    return GridFunction(grid, level.reshape(-1), WEIGHT)


def weight_from_spec(spec: dict, grid: DyadicGrid) -> GridFunction:
    """Build a weight from ``{"power": {"delta": ...}}`` or ``{"cascade": {"eta": ..., "seed": ...}}``."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"weight spec must have exactly one generator key, got {spec!r}")
    (kind, args), = spec.items()
    if kind == "power":
        return gen_power_weight(float(args["delta"]), grid)
    if kind == "cascade":
        return gen_cascade_weight(grid, float(args["eta"]), int(args["seed"]))
    raise ValueError(f"unknown weight generator {kind!r}")
