"""The four-variable special function ``B`` behind the weighted fractional
maximal inequality, and executable checks of each property its argument uses.

    B(x, y, w, v) = y**q w - (q/s) K**(q-s-t) c x**t y**s v**(1-t)

on ``{x >= 0, y >= 0, w > 0, 1 <= w v**(r-1) <= c}``, where ``K`` is the
``L^p(w^{p/q})`` norm of the data function.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .dyadic import FUNCTION, WEIGHT, GridFunction, build_pyramid, conjugate_weight
from .muckenhoupt import ap_value
from .reports import VerificationReport

IDENTITY_RTOL = 1e-12
MONOTONE_SLACK = 1e-9
CORRECTED = "corrected"
PRINTED = "printed"


def _close(a: float, b: float, rtol: float = IDENTITY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


@dataclass(frozen=True)
class ExponentSystem:
    p: float
    alpha: float
    d: int

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not 0 <= self.alpha < self.d:
            raise ValueError(f"alpha must lie in [0, {self.d}), got {self.alpha}")
        if not 1.0 / self.p - self.alpha / self.d > 0:
            raise ValueError("1/p - alpha/d must be positive for a finite q")

    @property
    def q(self) -> float:
        if self.alpha == 0:
            return float(self.p)
        return 1.0 / (1.0 / self.p - self.alpha / self.d)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def beta(self) -> float:
        """Upper end ``q/p' + 1`` of the admissible ``r`` range."""
        return self.q / self.p_conj + 1.0


@dataclass(frozen=True)
class BellmanParams:
    system: ExponentSystem
    r: float
    c: float = 1.0
    K: float = 1.0

    def __post_init__(self):
        if not 1 < self.r < self.system.beta:
            raise ValueError(f"r={self.r} outside (1, {self.system.beta})")
        if not self.c >= 1:
            raise ValueError(f"c must be at least 1, got {self.c}")
        if not self.K >= 0:
            raise ValueError(f"K must be nonnegative, got {self.K}")
        p, q, s, t = self.p, self.q, self.s, self.t
        if not (0 < s < q and t > 1):
            raise ArithmeticError(f"derived exponents out of range: s={s}, t={t}")
        for lhs, rhs in ((p * (q - s), q * t), (t * q / (q - s), p),
                         (q * (q - s - t) / (q - s) + p, q), (q - s, self.r * q * q / self.D)):
            if not _close(lhs, rhs):
                raise ArithmeticError(f"exponent identity failed: {lhs} != {rhs}")

    @property
    def p(self) -> float:
        return float(self.system.p)

    @property
    def q(self) -> float:
        return self.system.q

    @property
    def alpha(self) -> float:
        return float(self.system.alpha)

    @property
    def d(self) -> int:
        return self.system.d

    @property
    def u(self) -> float:
        return (self.p - 1.0) * self.q / self.p + 1.0

    @property
    def D(self) -> float:
        return (self.r - 1.0) * (self.q - self.p) + self.p * self.q

    @property
    def s(self) -> float:
        return self.q - self.r * self.q ** 2 / self.D

    @property
    def t(self) -> float:
        return self.r * self.p * self.q / self.D

    def with_data(self, c: float | None = None, K: float | None = None) -> BellmanParams:
        return BellmanParams(self.system, self.r, self.c if c is None else c, self.K if K is None else K)


def bellman_params(p: float, alpha: float, d: int, r: float, c: float = 1.0, K: float = 1.0) -> BellmanParams:
    return BellmanParams(ExponentSystem(p, alpha, d), r, c, K)


@dataclass(frozen=True)
class BellmanPoint:
    x: float
    y: float
    w: float
    v: float


def in_domain(x, y, w, v, r: float, c: float, rtol: float = 1e-12):
    """Membership in ``{x >= 0, y >= 0, w > 0, 1 <= w v**(r-1) <= c}`` (vectorised)."""
    x, y, w, v = (np.asarray(a, dtype=float) for a in (x, y, w, v))
    with np.errstate(divide="ignore", invalid="ignore"):
        prod = w * v ** (r - 1.0)
    return (x >= 0) & (y >= 0) & (w > 0) & (v > 0) & (prod >= 1 - rtol) & (prod <= c * (1 + rtol))


def eval_B(x, y, w, v, params: BellmanParams):
    """``B`` at one point or on broadcast arrays."""
    q, s, t = params.q, params.s, params.t
    coef = (q / s) * params.K ** (q - s - t) * params.c
    return y ** q * w - coef * x ** t * y ** s * v ** (1.0 - t)


def eval_B_point(pt: BellmanPoint, params: BellmanParams) -> float:
    if not in_domain(pt.x, pt.y, pt.w, pt.v, params.r, params.c):
        raise ValueError(f"{pt} lies outside the domain of B")
    return float(eval_B(pt.x, pt.y, pt.w, pt.v, params))


def dB_dy(x, y, w, v, params: BellmanParams):
    q, s, t = params.q, params.s, params.t
    coef = q * params.K ** (q - s - t) * params.c
    return q * y ** (q - 1.0) * w - coef * x ** t * y ** (s - 1.0) * v ** (1.0 - t)


def check_y_partial(x: float, w: float, v: float, m: float, params: BellmanParams,
                    samples: int = 64) -> dict:
    """Sign of ``dB/dy`` on ``(0, m**(alpha/d) x]`` for the data at a cube of measure ``m``.

    The preconditions are the ones the data supply: ``w v**(r-1) <= c`` and
    the Hölder bound ``m x <= K v**((r-1)/q) m**(1-1/p)``.  Under them the
    closed-form condition ``m**(alpha(q-s)/d) x**(q-s-t) <= K**(q-s-t) v**(r-t)``
    must hold and the derivative must be nonpositive on the whole interval.
    """
    p, q, s, t, r, K = params.p, params.q, params.s, params.t, params.r, params.K
    report = {"x": x, "w": w, "v": v, "m": m}
    if x <= 0:
        report.update(status="vacuous", holds=True)
        return report
    pre_weight = w * v ** (r - 1.0) <= params.c * (1 + IDENTITY_RTOL)
    holder_rhs = K * v ** ((r - 1.0) / q) * m ** (1.0 - 1.0 / p)
    pre_holder = m * x <= holder_rhs * (1 + IDENTITY_RTOL)
    report.update(precondition_weight=bool(pre_weight), precondition_holder=bool(pre_holder))
    if not (pre_weight and pre_holder):
        report.update(status="precondition_violated", holds=None)
        return report
    lhs = m ** (params.alpha * (q - s) / params.d) * x ** (q - s - t)
    rhs = K ** (q - s - t) * v ** (r - t)
    closed_form = lhs <= rhs * (1 + 1e-10)
    y_max = m ** (params.alpha / params.d) * x
    ys = y_max * np.arange(1, samples + 1) / samples
    deriv = dB_dy(x, ys, w, v, params)
    scale = q * ys ** (q - 1.0) * w
    sampled = bool(np.all(deriv <= 1e-10 * scale))
    report.update(status="checked", closed_form_lhs=lhs, closed_form_rhs=rhs,
                  closed_form=bool(closed_form), max_derivative=float(deriv.max()),
                  sampled=sampled, holds=bool(closed_form and sampled))
    return report


def lp_norm(phi: GridFunction, w: GridFunction, params: BellmanParams) -> float:
    """``||phi||_{L^p(w^{p/q})}`` over the unit root cube."""
    p, q = params.p, params.q
    return float(np.mean(phi.values ** p * w.values ** (p / q)) ** (1.0 / p))


def params_for_data(phi: GridFunction, w: GridFunction, p: float, alpha: float, r: float,
                    c: float | None = None) -> BellmanParams:
    """Parameters with ``K`` the data norm and ``c`` (by default) the dyadic A_r characteristic."""
    params = bellman_params(p, alpha, w.d, r)
    if c is None:
        c = max(ap_value(w, r), 1.0)
    return params.with_data(c=c, K=lp_norm(phi, w, params))


@dataclass(frozen=True)
class _Sequences:
    phi: list
    psi: list
    w: list
    v: list


def _sequences(phi: GridFunction, w: GridFunction, params: BellmanParams) -> _Sequences:
    if phi.grid != w.grid:
        raise ValueError("phi and w live on different grids")
    if phi.mode != FUNCTION or w.mode != WEIGHT:
        raise ValueError("expected a function-mode phi and a weight-mode w")
    char = ap_value(w, params.r)
    if char > params.c * (1 + IDENTITY_RTOL):
        raise ValueError(f"A_r characteristic {char} exceeds c={params.c}")
    pp, pw = build_pyramid(phi), build_pyramid(w)
    pv = build_pyramid(conjugate_weight(w, params.r))
    N = phi.depth
    phis = [pp.on_finest(n) for n in range(N + 1)]
    psis = []
    running = None
    for n in range(N + 1):
        term = 2.0 ** (-n * params.alpha) * phis[n]
        running = term if running is None else np.maximum(running, term)
        psis.append(running)
    return _Sequences(phis, psis, [pw.on_finest(n) for n in range(N + 1)],
                      [pv.on_finest(n) for n in range(N + 1)])


def check_step_monotonicity(phi: GridFunction, w: GridFunction, params: BellmanParams) -> dict:
    """``I_n = integral of B(phi_n, psi_n, w_n, v_n)`` over the root, n = 0..N.

    Also records the intermediate ``J_n = integral of B(phi_n, psi_{n-1}, w_n, v_n)``
    so that both halves of each step (raising ``y``, then averaging) are visible.
    """
    seq = _sequences(phi, w, params)
    N = phi.depth
    I = [float(np.mean(eval_B(seq.phi[n], seq.psi[n], seq.w[n], seq.v[n], params))) for n in range(N + 1)]
    J = [float(np.mean(eval_B(seq.phi[n], seq.psi[n - 1], seq.w[n], seq.v[n], params)))
         for n in range(1, N + 1)]
    scales = [float(np.mean(seq.psi[n] ** params.q * seq.w[n])) for n in range(N + 1)]
    steps_ok = []
    for n in range(1, N + 1):
        slack = MONOTONE_SLACK * max(abs(I[n]), abs(I[n - 1]), scales[n], scales[n - 1])
        steps_ok.append(I[n] <= I[n - 1] + slack and I[n] <= J[n - 1] + slack and J[n - 1] <= I[n - 1] + slack)
    return {
        "I": I,
        "J": J,
        "nonincreasing": all(steps_ok),
        "nonpositive": all(v <= MONOTONE_SLACK * s for v, s in zip(I, scales)),
        "step_ok": steps_ok,
    }


def check_level0_sign(phi: GridFunction, w: GridFunction, params: BellmanParams) -> dict:
    """``B(phi_0, psi_0, w_0, v_0) <= 0`` at the root."""
    seq = _sequences(phi, w, params)
    x, y, wv, vv = seq.phi[0][0], seq.psi[0][0], seq.w[0][0], seq.v[0][0]
    value = float(eval_B(x, y, wv, vv, params))
    scale = y ** params.q * wv
    return {"value": value, "holds": bool(value <= MONOTONE_SLACK * scale)}


def majorant(x, y, w, params: BellmanParams, mode: str = CORRECTED):
    """Right side of the majorisation; ``mode='printed'`` uses ``y**p w`` in the leading term."""
    p, q, s, t = params.p, params.q, params.s, params.t
    lead = y ** q * w if mode == CORRECTED else y ** p * w
    coef = (q / s) ** (q / (q - s)) * params.K ** (q * (q - s - t) / (q - s)) * params.c ** (q / (q - s))
    return (q - s) / q * (lead - coef * x ** p * w ** (p / q))


def check_majorization(x, y, w, v, params: BellmanParams, mode: str = CORRECTED) -> dict:
    """Compare ``B`` with its majorant on points of the domain (vectorised).

    The corrected form is asserted by callers; the printed form is a
    diagnostic and only its violation rate is reported.
    """
    x, y, w, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, w, v)))
    if not np.all(in_domain(x, y, w, v, params.r, params.c)):
        raise ValueError("points outside the domain of B")
    b = eval_B(x, y, w, v, params)
    rhs = majorant(x, y, w, params, mode)
    scale = np.abs(y ** params.q * w) + np.abs(b - y ** params.q * w) + np.abs(rhs)
    ok = b >= rhs - 1e-10 * scale
    return {
        "mode": mode,
        "count": int(ok.size),
        "violations": int(ok.size - np.count_nonzero(ok)),
        "violation_rate": float(1.0 - np.count_nonzero(ok) / ok.size) if ok.size else 0.0,
        "min_gap": float(np.min(b - rhs)) if ok.size else 0.0,
        "holds": bool(np.all(ok)),
    }


def g_hessian(t: float, x: float, v: float) -> np.ndarray:
    """Hessian of ``G(x, v) = x**t v**(1-t)``."""
    off = t * (1.0 - t) * x ** (t - 1.0) * v ** (-t)
    return np.array([
        [t * (t - 1.0) * x ** (t - 2.0) * v ** (1.0 - t), off],
        [off, t * (t - 1.0) * x ** t * v ** (-1.0 - t)],
    ])


def check_G_convexity(t: float, points=None) -> dict:
    """PSD test of the Hessian of ``G`` plus sampled midpoint convexity."""
    if points is None:
        points = [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0), (3.0, 2.0), (0.2, 0.7)]
    points = [(float(a), float(b)) for a, b in points]
    dets, traces, min_eigs = [], [], []
    for x, v in points:
        h = g_hessian(t, x, v)
        dets.append(float(np.linalg.det(h)))
        traces.append(float(np.trace(h)))
        eig = np.linalg.eigvalsh(h)
        min_eigs.append(float(eig[0] / max(abs(eig).max(), 1e-300)))
    psd = all(e >= -1e-12 for e in min_eigs)

    def G(x, v):
        return x ** t * v ** (1.0 - t)

    mid_ok = True
    worst = -math.inf
    for i, (a1, b1) in enumerate(points):
        for a2, b2 in points[i + 1:]:
            gap = G((a1 + a2) / 2, (b1 + b2) / 2) - (G(a1, b1) + G(a2, b2)) / 2
            worst = max(worst, gap)
            if gap > 1e-12 * (abs(G(a1, b1)) + abs(G(a2, b2))):
                mid_ok = False
    return {"t": t, "psd": psd, "determinants": dets, "traces": traces,
            "midpoint_convex": mid_ok, "worst_midpoint_gap": worst, "expected_psd": not 0 < t < 1}


def segment_products(P, Q, beta: float, samples: int = 1024) -> np.ndarray:
    """``w v**(beta-1)`` at ``samples`` equally spaced points of segment ``PQ`` (endpoints included).

    ``P`` and ``Q`` may be single points of shape ``(2,)`` or batches ``(n, 2)``.
    """
    P, Q = np.atleast_2d(np.asarray(P, float)), np.atleast_2d(np.asarray(Q, float))
    u = np.linspace(0.0, 1.0, samples)[None, :]
    w = P[:, :1] + u * (Q[:, :1] - P[:, :1])
    v = P[:, 1:2] + u * (Q[:, 1:2] - P[:, 1:2])
    return w * v ** (beta - 1.0)


def _quadratic_max(P, Q) -> float:
    """Exact maximum of ``w v`` on the segment (the ``beta = 2`` case)."""
    (w0, v0), (w1, v1) = P, Q
    dw, dv = w1 - w0, v1 - v0
    cands = [0.0, 1.0]
    if dw * dv != 0:
        u = -(w0 * dv + v0 * dw) / (2 * dw * dv)
        if 0 < u < 1:
            cands.append(u)
    return max((w0 + u * dw) * (v0 + u * dv) for u in cands)


def segment_containment(P, Q, lam: float, beta: float, c: float, d: int, samples: int = 1024) -> dict:
    """Check that segment ``PQ`` stays in ``{1 <= w v**(beta-1) <= 2**(beta d) c}``.

    Requires ``lam`` in ``[2**-d, 1 - 2**-d]`` and ``P``, ``Q`` and
    ``R = lam P + (1 - lam) Q`` in ``{1 <= w v**(beta-1) <= c}``.
    """
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    R = lam * P + (1 - lam) * Q

    def inside(pt, bound):
        prod = pt[0] * pt[1] ** (beta - 1.0)
        return pt[0] > 0 and pt[1] > 0 and 1 - 1e-12 <= prod <= bound * (1 + 1e-12)

    if not 2.0 ** -d - 1e-15 <= lam <= 1 - 2.0 ** -d + 1e-15:
        raise ValueError(f"lambda={lam} outside [2^-d, 1-2^-d]")
    if not all(inside(pt, c) for pt in (P, Q, R)):
        raise ValueError("P, Q and R must lie in the hyperbolic domain")
    prods = segment_products(P, Q, beta, samples)[0]
    bound = 2.0 ** (beta * d) * c
    hi = float(prods.max())
    if beta == 2:
        hi = max(hi, _quadratic_max(P, Q))
    lo = float(prods.min())
    return {"max_product": hi, "min_product": lo, "bound": bound,
            "holds": lo >= 1 - 1e-12 and hi <= bound * (1 + 1e-12)}


def bellman_check(phi: GridFunction, w: GridFunction, p: float, alpha: float, r: float,
                  c: float | None = None):
    """Run the monotonicity, level-0, derivative and majorisation checks on one data pair."""
    start = time.perf_counter()
    params = params_for_data(phi, w, p, alpha, r, c)
    mono = check_step_monotonicity(phi, w, params)
    level0 = check_level0_sign(phi, w, params)
    seq = _sequences(phi, w, params)
    xs = np.concatenate(seq.phi)
    ys = np.concatenate(seq.psi)
    ws = np.concatenate(seq.w)
    vs = np.concatenate(seq.v)
    major = check_majorization(xs, ys, ws, vs, params, CORRECTED)
    printed = check_majorization(xs, ys, ws, vs, params, PRINTED)
    partial_failures = 0
    partial_checked = 0
    for n in range(phi.depth + 1):
        m = w.grid.cell_measure(n)
        stride = 2 ** ((phi.depth - n) * phi.d)
        for x, wv, vv in zip(seq.phi[n][::stride], seq.w[n][::stride], seq.v[n][::stride]):
            rep = check_y_partial(float(x), float(wv), float(vv), m, params, samples=16)
            if rep["status"] == "checked":
                partial_checked += 1
                partial_failures += not rep["holds"]
            elif rep["status"] == "precondition_violated":
                partial_failures += 1
    return VerificationReport(
        name="bellman_check",
        instance={"d": w.d, "depth": w.depth, "p": float(p), "alpha": float(alpha), "r": float(r)},
        r_star=float(r),
        diagnostics={
            "c": params.c, "K": params.K, "s": params.s, "t": params.t,
            "I": mono["I"], "level0_value": level0["value"],
            "majorization_min_gap": major["min_gap"],
            "printed_majorization_violation_rate": printed["violation_rate"],
            "y_partial_checked": partial_checked,
        },
        checks={
            "monotone": mono["nonincreasing"],
            "nonpositive": mono["nonpositive"],
            "level0_sign": bool(level0["holds"]),
            "majorization": major["holds"],
            "y_partial": partial_failures == 0,
        },
        runtime=time.perf_counter() - start,
    )
