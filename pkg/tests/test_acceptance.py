"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""
import math
import statistics
import time

import numpy as np
import pytest

from fracmax.bellman import (CORRECTED, ExponentSystem, bellman_params, check_G_convexity, check_majorization,
                             segment_containment)
from fracmax.dyadic import WEIGHT, DyadicGrid, constant, from_values
from fracmax.harness import buckley_sharpness_scan, lacey_exponent_chain, log_h, verify_dyadic_theorem
from fracmax.martingale import MartingaleWeight, dyadic_filtration, martingale_ap_char
from fracmax.muckenhoupt import ap_value, gen_cascade_weight
from fracmax.selfimprove import PRINTED, scale_a, self_improve, solve_s
from fracmax.sweeps import run_sweep

SEED = 20240601
# the lower end of the double inequality is tight to below double precision as beta -> 1
DOUBLE_INEQ_RTOL = 1e-12
_sweep_cache = {}


def announce(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    print(line, flush=True)
    return line


@pytest.fixture
def say(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print()
            announce(number, ok, detail)
    return emit


def theorem_sweep(kind):
    if kind not in _sweep_cache:
        start = time.perf_counter()
        reps = run_sweep(kind, 100, seed=SEED, options={"depth": 8})
        _sweep_cache[kind] = (reps, time.perf_counter() - start)
    return _sweep_cache[kind]


def check_root_solver():
    errs, times = [], []
    for (beta, d, c), exact in (((2, 1, 1), -(6 + 4 * math.sqrt(3))), ((2, 1, 2), -(14 + math.sqrt(224)))):
        runs = []
        for _ in range(25):
            t = time.perf_counter()
            s = solve_s(beta, d, c)
            runs.append(time.perf_counter() - t)
        errs.append(abs(s - exact))
        times.append(statistics.median(runs))
    ok = max(errs) <= 1e-10 and max(times) < 1e-3
    return ok, f"root solver |err| max {max(errs):.2e} (<= 1e-10), median time {max(times) * 1e3:.3f} ms (< 1 ms)"


def check_double_inequality():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    bad = 0
    for _ in range(200):
        beta = rng.uniform(1.1, 4.0)
        d = int(rng.integers(1, 4))
        c = rng.uniform(1.0, 100.0)
        s = solve_s(beta, d, c)
        lower = -scale_a(beta, d, c) * (1 + DOUBLE_INEQ_RTOL)
        upper = -beta ** (beta / (beta - 1)) * c ** (1 / (beta - 1))
        bad += not lower <= s <= upper
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < 1.0, f"double inequality on 200 tuples: {bad} violations in {elapsed:.3f} s (< 1 s)"


def check_self_improvement():
    reps = run_sweep("selfimprove", 120, seed=SEED)
    violations = sum(not r.passed for r in reps)
    claimed_ok = sum(bool(r.diagnostics["claimed_holds"]) for r in reps)
    fixture = self_improve(2, 1, 1, PRINTED)
    flag = (fixture.rigorous_exceeds_claimed and abs(fixture.bound_rigorous - 13.87) < 5e-3
            and abs(fixture.bound_claimed - 13.71) < 1e-2)
    ok = len(reps) >= 100 and violations == 0 and flag
    return ok, (f"[w]_A_r <= C^(r-1) on {len(reps) - violations}/{len(reps)} weights; claimed bound held on "
                f"{claimed_ok}; printed fixture C^(r-1)={fixture.bound_rigorous:.4f} > "
                f"{fixture.bound_claimed:.4f} flag={fixture.rigorous_exceeds_claimed}")


def check_bellman_monotonicity():
    reps, elapsed = theorem_sweep("bellman")
    mono = sum(bool(r.checks["monotone"]) for r in reps)
    nonpos = sum(bool(r.checks["nonpositive"]) and bool(r.checks["level0_sign"]) for r in reps)
    ok = mono == nonpos == len(reps) >= 100 and elapsed < 30
    return ok, (f"I_n nonincreasing on {mono}/{len(reps)}, I_n <= 0 with level-0 sign on {nonpos}/{len(reps)}, "
                f"{elapsed:.2f} s (< 30 s)")


def majorization_parameter_sets(rng, count=20):
    sets = []
    pairs = [(4 / 3, 0.0), (2.0, 0.0), (3.0, 0.0), (4 / 3, 0.5), (1.5, 0.25), (2.5, 0.2)]
    while len(sets) < count:
        p, alpha = pairs[len(sets) % len(pairs)]
        system = ExponentSystem(p, alpha, 1)
        r = 1 + rng.uniform(0.05, 0.95) * (system.beta - 1)
        sets.append(bellman_params(p, alpha, 1, r, c=rng.uniform(1, 20), K=math.exp(rng.uniform(-2, 2))))
    return sets


def domain_points(rng, prm, n):
    w = np.exp(rng.uniform(-3, 3, n))
    prod = rng.uniform(1, prm.c, n)
    v = (prod / w) ** (1 / (prm.r - 1))
    x = np.exp(rng.uniform(-4, 3, n)) * (rng.random(n) > 0.05)
    y = np.exp(rng.uniform(-4, 3, n)) * (rng.random(n) > 0.05)
    return x, y, w, v


def check_majorization_sweep():
    rng = np.random.default_rng(SEED)
    total = violations = printed_bad = 0
    for prm in majorization_parameter_sets(rng):
        pts = domain_points(rng, prm, 5000)
        rep = check_majorization(*pts, prm, CORRECTED)
        total += rep["count"]
        violations += rep["violations"]
        printed_bad += check_majorization(*pts, prm, PRINTED)["violations"]
    ok = violations == 0 and total >= 100_000
    return ok, (f"corrected majorization: {violations} violations over {total} points in 20 sets; "
                f"printed form violation rate {printed_bad / total:.4f} (reported only)")


def check_convexity():
    rng = np.random.default_rng(SEED)
    ts = []
    for _ in range(200):
        p = rng.uniform(1.05, 5)
        alpha = rng.uniform(0, 0.95) / p
        system = ExponentSystem(p, alpha, 1)
        ts.append(bellman_params(p, alpha, 1, 1 + rng.uniform(0.01, 0.99) * (system.beta - 1)).t)
    pts = [(math.exp(a), math.exp(b)) for a, b in rng.uniform(-2, 2, (12, 2))]
    in_range = [check_G_convexity(t, pts) for t in ts]
    good = sum(r["psd"] and r["midpoint_convex"] for r in in_range)
    control = check_G_convexity(0.5, pts)
    ok = good == len(ts) and min(ts) > 1 and not control["midpoint_convex"]
    return ok, (f"Hessian PSD and midpoint convex for {good}/{len(ts)} in-range t (min t {min(ts):.4f} > 1); "
                f"t=0.5 control midpoint convex={control['midpoint_convex']} (must be False)")


def admissible_segments(rng, count):
    out = []
    while len(out) < count:
        beta = rng.uniform(1.1, 4.0)
        c = rng.uniform(1.0, 50.0)
        d = int(rng.integers(1, 3))
        lam = rng.uniform(2.0 ** -d, 1 - 2.0 ** -d)
        pts = []
        for _ in range(2):
            v = math.exp(rng.uniform(-2, 2))
            pts.append((rng.uniform(1, c) / v ** (beta - 1), v))
        P, Q = np.array(pts[0]), np.array(pts[1])
        R = lam * P + (1 - lam) * Q
        prod = R[0] * R[1] ** (beta - 1)
        if 1 <= prod <= c:
            out.append((P, Q, lam, beta, c, d))
    return out


def check_segments():
    rng = np.random.default_rng(SEED)
    bad = 0
    for P, Q, lam, beta, c, d in admissible_segments(rng, 10_000):
        bad += not segment_containment(P, Q, lam, beta, c, d, samples=1024)["holds"]
    fixture = segment_containment((2, 1), (0.5, 2), 0.5, 2, 2, 1)
    fx_ok = abs(fixture["max_product"] - 49 / 24) < 1e-12 and fixture["holds"]
    return bad == 0 and fx_ok, (f"segment containment: {bad} violations over 10000 configurations; "
                                f"fixture max {fixture['max_product']:.6f} (49/24 = {49 / 24:.6f}) <= 8")


def check_dyadic_theorem():
    reps, _ = theorem_sweep("verify")
    passed = sum(r.passed for r in reps)
    phi = from_values([4, 0, 0, 0])
    rep = verify_dyadic_theorem(phi, constant(DyadicGrid(1, 2), 1.0, WEIGHT), 2, 0)
    fx_ok = abs(rep.lhs - 2.3452) < 1e-4 and abs(rep.rhs - 4.0) < 4.0 * 1e-4 and rep.passed
    return passed == len(reps) and fx_ok, (f"dyadic two-weight bound on {passed}/{len(reps)} sweep instances; "
                                           f"fixture lhs {rep.lhs:.4f}, rhs {rep.rhs:.6f} (4.0 at the r -> 1 limit)")


def check_alpha_zero():
    rng = np.random.default_rng(SEED)
    w = gen_cascade_weight(DyadicGrid(1, 8), 0.5, SEED)
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(1.05, 6.0)
        r = 1 + rng.uniform(0.01, 0.99) * (p - 1)
        char = ap_value(w, r)
        doob = char ** (1 / r) * (p / (p - r)) ** (1 / r)
        prm = bellman_params(p, 0.0, 1, r)
        worst = max(worst, abs(math.exp(log_h(char, r, ExponentSystem(p, 0.0, 1))) / doob - 1),
                    abs(prm.s - (p - r)) / max(p - r, 1.0), abs(prm.t - r) / r)
    return worst <= 1e-12, f"alpha=0 constant and s=p-r, t=r over 100 (p, r): worst relative error {worst:.2e}"


def check_lacey():
    rng = np.random.default_rng(SEED)
    identity = bound = 0
    for _ in range(100):
        p = rng.uniform(1.05, 6.0)
        d = int(rng.integers(1, 4))
        alpha = rng.uniform(0, 0.95) * d / p
        chain = lacey_exponent_chain(p, alpha, d, rng.uniform(1, 100))
        identity += chain["identity_holds"] and chain["endpoint_matches_target"]
        bound += chain["bound_holds"]
    exact = all(lacey_exponent_chain(p, 0.0, 1, 3.0)["target_power"] == 1 / (p - 1) for p in (4 / 3, 2.0, 3.0))
    ok = identity == bound == 100 and exact
    return ok, f"exponent identity {identity}/100, inequality {bound}/100, alpha=0 gives 1/(p-1) exactly: {exact}"


def check_sharpness():
    start = time.perf_counter()
    scan = buckley_sharpness_scan(2.0, [0.5, 0.7, 0.8, 0.9, 0.95], 14)
    elapsed = time.perf_counter() - start
    ok = 0.75 <= scan.slope <= 1.1 and elapsed < 60
    return ok, f"sharpness slope {scan.slope:.4f} in [0.75, 1.1] (target {scan.target}), {elapsed:.2f} s (< 60 s)"


def check_martingale():
    worst = 0.0
    for d, depth, eta, seed in ((1, 8, 0.8, 1), (1, 10, 0.5, 2), (2, 4, 0.8, 3), (2, 5, 0.3, 4), (3, 2, 0.5, 5)):
        w = gen_cascade_weight(DyadicGrid(d, depth), eta, seed)
        Z = MartingaleWeight.normalized(w.values, dyadic_filtration(d, depth))
        for p in (1.5, 2.0, 3.0):
            worst = max(worst, abs(martingale_ap_char(Z, p) / ap_value(w, p) - 1))
    reps = run_sweep("martingale", 500, seed=SEED)
    bad = sum(not r.passed for r in reps)
    ok = worst <= 1e-12 and bad == 0
    return ok, f"martingale vs dyadic characteristic worst rel err {worst:.2e}; Doob violations {bad}/500"


CRITERIA = [
    (1, check_root_solver), (2, check_double_inequality), (3, check_self_improvement),
    (4, check_bellman_monotonicity), (5, check_majorization_sweep), (6, check_convexity),
    (7, check_segments), (8, check_dyadic_theorem), (9, check_alpha_zero), (10, check_lacey),
    (11, check_sharpness), (12, check_martingale),
]


@pytest.mark.parametrize("number,check", CRITERIA, ids=[f"criterion_{n:02d}" for n, _ in CRITERIA])
def test_criterion(number, check, say):
    ok, detail = check()
    say(number, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, check in CRITERIA:
        ok, detail = check()
        announce(number, ok, detail)
        results.append(ok)
    raise SystemExit(0 if all(results) else 1)
