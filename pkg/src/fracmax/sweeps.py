"""Random instance generation and deterministic sweep execution.

Instance ``i`` of a sweep seeded with ``seed`` draws from
``default_rng([seed, i])``, so results do not depend on scheduling or on
the number of workers.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bellman import ExponentSystem, bellman_check
from .dyadic import FUNCTION, DyadicGrid, GridFunction
from .harness import verify_dyadic_theorem
from .martingale import MartingaleWeight, random_binary_filtration, verify_weighted_doob
from .muckenhoupt import gen_cascade_weight, gen_power_weight
from .selfimprove import CORRECTED, verify_self_improvement

EXPONENTS_P = (4.0 / 3.0, 2.0, 3.0)
ALPHAS = (0.0, 0.5)
# alpha = 1/2 needs p < 2 in one dimension (q must be finite)
EXPONENT_PAIRS = tuple((p, a) for a in ALPHAS for p in EXPONENTS_P if 1.0 / p - a > 0)
ETAS = (0.3, 0.5, 0.8)
DELTAS = (0.3, 0.6, 0.9)
BETAS = (1.5, 2.0, 3.0)
KINDS = ("selfimprove", "bellman", "verify", "martingale")


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def random_phi(grid: DyadicGrid, rng: np.random.Generator) -> GridFunction:
    """Nonnegative data with a random fraction of vanishing cells and a heavy tail."""
    n = grid.n_cells()
    keep = rng.random(n) < rng.uniform(0.2, 1.0)
    vals = rng.lognormal(0.0, rng.uniform(0.2, 2.0), n) * keep
    return GridFunction(grid, vals, FUNCTION)


def theorem_instance(seed: int, index: int, depth: int = 8) -> dict:
    """One-dimensional (phi, cascade weight, p, alpha) instance with r at mid-interval."""
    rng = instance_rng(seed, index)
    grid = DyadicGrid(1, depth)
    p, alpha = EXPONENT_PAIRS[rng.integers(len(EXPONENT_PAIRS))]
    eta = ETAS[rng.integers(len(ETAS))]
    wseed = int(rng.integers(2 ** 31))
    w = gen_cascade_weight(grid, eta, wseed)
    phi = random_phi(grid, rng)
    beta = ExponentSystem(p, alpha, 1).beta
    return {
        "phi": phi, "w": w, "p": p, "alpha": alpha, "r": 0.5 * (1.0 + beta),
        "meta": {"index": index, "seed": seed, "eta": eta, "weight_seed": wseed,
                 "p": p, "alpha": alpha, "depth": depth},
    }


def weight_instance(seed: int, index: int) -> dict:
    """A_beta test weight: power weights (d=1), cascades (d=1 depth <= 12, d=2 depth <= 5)."""
    rng = instance_rng(seed, index)
    beta = BETAS[index % len(BETAS)]
    family = ("power", "cascade1", "cascade2")[(index // len(BETAS)) % 3]
    if family == "power":
        depth = int(rng.integers(4, 13))
        delta = DELTAS[rng.integers(len(DELTAS))]
        w = gen_power_weight(delta, DyadicGrid(1, depth))
        meta = {"power": {"delta": delta}, "depth": depth, "d": 1}
    else:
        d = 1 if family == "cascade1" else 2
        depth = int(rng.integers(3, 13 if d == 1 else 6))
        eta = ETAS[rng.integers(len(ETAS))]
        wseed = int(rng.integers(2 ** 31))
        w = gen_cascade_weight(DyadicGrid(d, depth), eta, wseed)
        meta = {"cascade": {"eta": eta, "seed": wseed}, "depth": depth, "d": d}
    meta.update(index=index, seed=seed, beta=beta)
    return {"w": w, "beta": beta, "meta": meta}


def martingale_instance(seed: int, index: int, levels: int = 6) -> dict:
    rng = instance_rng(seed, index)
    filt = random_binary_filtration(levels, rng)
    Z = MartingaleWeight.normalized(rng.lognormal(0.0, rng.uniform(0.1, 1.5), filt.n_atoms), filt)
    X = rng.normal(size=filt.n_atoms) * (rng.random(filt.n_atoms) < 0.7)
    return {"X": X, "Z": Z, "meta": {"index": index, "seed": seed, "levels": levels}}


def run_instance(kind: str, seed: int, index: int, options: dict | None = None):
    options = options or {}
    if kind == "selfimprove":
        inst = weight_instance(seed, index)
        rep = verify_self_improvement(inst["w"], inst["beta"], options.get("mode", CORRECTED))
    elif kind == "bellman":
        inst = theorem_instance(seed, index, options.get("depth", 8))
        rep = bellman_check(inst["phi"], inst["w"], inst["p"], inst["alpha"], inst["r"])
    elif kind == "verify":
        inst = theorem_instance(seed, index, options.get("depth", 8))
        rep = verify_dyadic_theorem(inst["phi"], inst["w"], inst["p"], inst["alpha"])
    elif kind == "martingale":
        inst = martingale_instance(seed, index, options.get("levels", 6))
        rep = verify_weighted_doob(inst["X"], inst["Z"], options.get("p", 2.0), options.get("r", 1.5))
    else:
        raise ValueError(f"unknown sweep kind {kind!r}; choose from {', '.join(KINDS)}")
    rep.instance = {**rep.instance, **inst["meta"]}
    return rep


def _run(args):
    return run_instance(*args)


def run_sweep(kind: str, count: int, seed: int = 0, workers: int = 1, options: dict | None = None) -> list:
    """Reports for instances ``0..count-1``, always in index order."""
    jobs = [(kind, seed, i, options) for i in range(count)]
    if workers <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run, jobs))
