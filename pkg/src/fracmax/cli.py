"""Command-line front end.

Exit status is 0 when every asserted check passes, 2 when a check fails and
1 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bellman import ExponentSystem, bellman_check
from .dyadic import WEIGHT, DyadicGrid, GridFunction, load_grid_function
from .harness import buckley_sharpness_scan, verify_dyadic_theorem, verify_full_theorem
from .martingale import buckley_martingale_report, load_atoms, verify_weighted_doob
from .maximal import dyadic_fractional_maximal, grid_aligned_maximal_bruteforce
from .muckenhoupt import DYADIC, GRID_ALIGNED, ap_characteristic, mw_fractional_characteristic, weight_from_spec
from .reports import VerificationReport, dumps_csv, dumps_document
from .selfimprove import CORRECTED, PRINTED, self_improve
from .sweeps import KINDS, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed checks here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    workers: int = 1
    seed: int = 0
    csv: bool = False
    mode: str = CORRECTED


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _check_exponents(p: float, alpha: float, d: int | None = None) -> None:
    _need(p > 1, f"--p must exceed 1, got {p}")
    _need(alpha >= 0, f"--alpha must be nonnegative, got {alpha}")
    if d is not None:
        _need(alpha < d, f"--alpha must be below d={d}")
        _need(1 / p - alpha / d > 0, f"1/p - alpha/d must be positive (p={p}, alpha={alpha}, d={d})")


def validate(cfg: RunConfig) -> None:
    """Reject parameters that violate the preconditions of the requested operation."""
    prm = cfg.params
    _need(cfg.workers >= 1, "--workers must be at least 1")
    _need(cfg.mode in (PRINTED, CORRECTED), f"--mode must be printed or corrected, got {cfg.mode}")
    cmd = cfg.command
    if cmd == "apchar":
        _need(prm["p"] > 1, "--p must exceed 1")
        _need(prm.get("q") is None or prm["q"] > 0, "--q must be positive")
    elif cmd == "maximal":
        _need(prm["alpha"] >= 0, "--alpha must be nonnegative")
    elif cmd == "selfimprove":
        _need(prm["beta"] > 1, "--beta must exceed 1")
        _need(prm["d"] >= 1, "--d must be at least 1")
        _need(prm["c"] >= 1, "--c must be at least 1")
    elif cmd in ("bellman-check", "verify"):
        _check_exponents(prm["p"], prm["alpha"])
        if prm.get("c") is not None:
            _need(prm["c"] >= 1, "--c must be at least 1")
    elif cmd == "sharpness":
        _need(prm["p"] > 1, "--p must exceed 1")
        _need(prm["depth"] >= 1, "--depth must be at least 1")
        _need(len(prm["deltas"]) >= 2, "--deltas needs at least two values")
        for delta in prm["deltas"]:
            _need(-1 < delta < prm["p"] - 1, f"delta={delta} outside (-1, p-1)")
    elif cmd == "martingale":
        _need(prm["p"] > prm["r"] > 1, "need --p > --r > 1")
    elif cmd == "sweep":
        _need(prm["kind"] in KINDS, f"--kind must be one of {', '.join(KINDS)}")
        _need(prm["count"] >= 1, "--count must be at least 1")
    else:
        raise UsageError(f"unknown command {cmd!r}")


def load_weight(path) -> GridFunction:
    """A weight file is a grid-function document or a generator spec with ``d`` and ``depth``."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict) and "values" in doc:
        w = GridFunction.from_document({**doc, "mode": doc.get("mode", WEIGHT)})
        if w.mode != WEIGHT:
            raise UsageError(f"{path}: expected a weight-mode grid function")
        return w
    if not isinstance(doc, dict) or "depth" not in doc:
        raise UsageError(f"{path}: neither a grid function nor a generator spec with a depth")
    grid = DyadicGrid(int(doc.get("d", 1)), int(doc["depth"]))
    spec = {k: v for k, v in doc.items() if k not in ("d", "depth")}
    return weight_from_spec(spec, grid)


def _load_pair(prm: dict):
    phi = load_grid_function(prm["phi"])
    w = load_weight(prm["weight"])
    if phi.grid != w.grid:
        raise UsageError("--phi and --weight live on different grids")
    _check_exponents(prm["p"], prm["alpha"], w.d)
    return phi, w


def _status(reports) -> int:
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def dispatch(cfg: RunConfig):
    """Run one command; returns ``(exit_status, payload)``.

    The payload is a document, a report, or a list of reports.
    """
    validate(cfg)
    prm = cfg.params
    cmd = cfg.command
    if cmd == "apchar":
        w = load_weight(prm["weight"])
        ch = ap_characteristic(w, prm["p"], prm["family"])
        doc = {"kind": "ap_characteristic", "p": ch.p, "value": ch.value,
               "family": ch.family, "cube": list(ch.cube), "d": w.d, "depth": w.depth}
        if prm.get("q") is not None:
            doc["q"] = prm["q"]
            doc["mw_characteristic"] = mw_fractional_characteristic(w, prm["p"], prm["q"])
        return EXIT_OK, doc
    if cmd == "maximal":
        f = load_grid_function(prm["phi"])
        _need(prm["alpha"] < f.d, f"--alpha must be below d={f.d}")
        if prm["grid_aligned"]:
            res = grid_aligned_maximal_bruteforce(f, prm["alpha"])
        else:
            res = dyadic_fractional_maximal(f, prm["alpha"])
        return EXIT_OK, res.as_grid_function().to_document()
    if cmd == "selfimprove":
        return EXIT_OK, self_improve(prm["beta"], prm["d"], prm["c"], cfg.mode)
    if cmd == "bellman-check":
        phi, w = _load_pair(prm)
        beta = ExponentSystem(prm["p"], prm["alpha"], w.d).beta
        _need(1 < prm["r"] < beta, f"--r must lie in (1, {beta})")
        rep = bellman_check(phi, w, prm["p"], prm["alpha"], prm["r"], prm.get("c"))
        return _status([rep]), rep
    if cmd == "verify":
        phi, w = _load_pair(prm)
        run = verify_full_theorem if prm["full"] else verify_dyadic_theorem
        rep = run(phi, w, prm["p"], prm["alpha"])
        return _status([rep]), rep
    if cmd == "sharpness":
        return EXIT_OK, buckley_sharpness_scan(prm["p"], prm["deltas"], prm["depth"])
    if cmd == "martingale":
        X, Z = load_atoms(prm["atoms"], prm.get("levels"))
        rep = verify_weighted_doob(X, Z, prm["p"], prm["r"])
        if prm.get("buckley_d") is not None:
            extra = buckley_martingale_report(X, Z, prm["p"], prm["buckley_d"])
            rep.diagnostics["buckley"] = extra.diagnostics
            rep.checks.update(extra.checks)
        return _status([rep]), rep
    if cmd == "sweep":
        options = {"mode": cfg.mode}
        for key in ("depth", "levels", "p", "r"):
            if prm.get(key) is not None:
                options[key] = prm[key]
        reps = run_sweep(prm["kind"], prm["count"], cfg.seed, cfg.workers, options)
        return _status(reps), reps
    raise UsageError(f"unknown command {cmd!r}")


def render(payload, as_csv: bool) -> str:
    if as_csv:
        reps = payload if isinstance(payload, list) else [payload]
        if not all(isinstance(r, VerificationReport) for r in reps):
            raise UsageError("--csv applies only to verification reports")
        return dumps_csv(reps)
    if isinstance(payload, list):
        return dumps_document({"kind": "sweep", "schema_version": 1, "reports": payload,
                               "count": len(payload), "failures": sum(not r.passed for r in payload)})
    if hasattr(payload, "to_document"):
        payload = payload.to_document()
    return dumps_document({"schema_version": 1, **payload})


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("values must be finite")
    return vals


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # shared by the top level and each subcommand so flags may go on either side
    sup = argparse.SUPPRESS
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=sup if suppress else 0, help="sweep seed")
    g.add_argument("--workers", type=int, default=sup if suppress else 1, help="worker processes for sweeps")
    g.add_argument("--out", default=sup if suppress else None, help="output file (default: stdout)")
    g.add_argument("--csv", action="store_true", default=sup if suppress else False,
                   help="write verification reports as CSV rows")
    g.add_argument("--mode", choices=(PRINTED, CORRECTED), default=sup if suppress else CORRECTED,
                   help="improved-exponent formula")
    return g


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracmax", parents=[_global_flags(False)],
                     description="Numerical checks of weighted bounds for fractional maximal operators.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = [_global_flags(True)]

    s = sub.add_parser("apchar", parents=common, help="A_p characteristic of a weight")
    s.add_argument("--weight", required=True, help="grid-function document or generator spec")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--family", choices=(DYADIC, GRID_ALIGNED), default=DYADIC)
    s.add_argument("--q", type=float, help="also report the fractional A_{p,q} characteristic")

    s = sub.add_parser("maximal", parents=common, help="fractional maximal function of a grid function")
    s.add_argument("--phi", required=True)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--grid-aligned", action="store_true", help="brute force over grid-aligned cubes")

    s = sub.add_parser("selfimprove", parents=common, help="improved exponent and constant")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--c", type=float, required=True)

    s = sub.add_parser("bellman-check", parents=common, help="Bellman function checks on one data pair")
    s.add_argument("--phi", required=True)
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--c", type=float)

    s = sub.add_parser("verify", parents=common, help="two-weight bound for one data pair")
    s.add_argument("--phi", required=True)
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--full", action="store_true", help="grid-aligned cubes with the 12**d factor")

    s = sub.add_parser("sharpness", parents=common, help="slope of the power-weight scan")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--deltas", type=_floats, required=True, help="comma-separated exponents")

    s = sub.add_parser("martingale", parents=common, help="weighted Doob inequality on an atom file")
    s.add_argument("--atoms", required=True)
    s.add_argument("--levels", type=int)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--buckley-d", type=int, help="also report the A_p route for dimension D")

    s = sub.add_parser("sweep", parents=common, help="deterministic random sweep")
    s.add_argument("--kind", choices=KINDS, required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--depth", type=int)
    s.add_argument("--levels", type=int)
    s.add_argument("--p", type=float)
    s.add_argument("--r", type=float)
    return parser


GLOBAL_KEYS = ("seed", "workers", "out", "csv", "mode")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS + ("command",)}
    return RunConfig(command=args.command, params=params, out=args.out, workers=args.workers,
                     seed=args.seed, csv=args.csv, mode=args.mode)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("fracmax: error: a command is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = config_from_args(args)
        status, payload = dispatch(cfg)
        text = render(payload, cfg.csv)
        if cfg.out:
            Path(cfg.out).write_text(text)
        else:
            sys.stdout.write(text)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"fracmax: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
