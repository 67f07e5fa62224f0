import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracmax.dyadic import WEIGHT, DyadicGrid, constant, from_values
from fracmax.muckenhoupt import gen_cascade_weight
from fracmax.selfimprove import (CORRECTED, PRINTED, admissible_interval, bracket_factor, exponent_gap,
                                 improved_exponent, log_f, lower_gap, scale_a, self_improve, solve_s,
                                 vasyunin_constant, verify_self_improvement)

# 40-digit mpmath evaluations of the closed forms (bisection on the same bracket)
S_211 = -(6 + 4 * math.sqrt(3))
S_212 = -(14 + math.sqrt(224))
C_CORRECTED_211 = 6.4548478895358077
BOUND_CORRECTED_211 = 5.7842314006147317
C_PRINTED_211 = 19.271823104917948
BOUND_PRINTED_211 = 13.872463811756677
DOUBLE_INEQ_RTOL = 1e-12

params = st.tuples(st.floats(1.1, 4.0), st.sampled_from([1, 2, 3]), st.floats(1.0, 100.0))


def test_root_fixtures():
    assert abs(solve_s(2, 1, 1) - S_211) < 1e-10
    assert abs(solve_s(2, 1, 2) - S_212) < 1e-10


def test_scale_a():
    assert scale_a(2, 1, 1) == pytest.approx(16.0, rel=1e-14)
    assert scale_a(2, 1, 2) == pytest.approx(32.0, rel=1e-14)


def test_exponent_fixtures():
    assert improved_exponent(2, 1, 1, CORRECTED) == pytest.approx(33 / 17, rel=1e-14)
    assert improved_exponent(2, 1, 1, PRINTED) == pytest.approx(17 / 9, rel=1e-14)
    assert improved_exponent(2, 1, 2, CORRECTED) == pytest.approx(65 / 33, rel=1e-14)


def test_constant_fixtures():
    assert vasyunin_constant(2, 1, 33 / 17, 1) == pytest.approx(C_CORRECTED_211, rel=1e-11)
    assert vasyunin_constant(2, 1, 17 / 9, 1) == pytest.approx(C_PRINTED_211, rel=1e-11)


def test_bracket_fixtures():
    s = solve_s(2, 1, 1)
    assert bracket_factor(2, 33 / 17, s) == pytest.approx(0.59599364905389034, rel=1e-10)
    assert bracket_factor(2, 17 / 9, s) == pytest.approx(0.19198729810778068, rel=1e-10)


@pytest.mark.parametrize("c,want", [(1, 0.59599364905389034), (10, 0.50939477927335626),
                                    (100, 0.50093769555702276)])
def test_corrected_bracket_at_least_half(c, want):
    res = self_improve(2, 1, c, CORRECTED)
    assert res.bracket == pytest.approx(want, rel=1e-9)
    assert res.bracket >= 0.5


def test_printed_bracket_collapses():
    brackets = [self_improve(2, 1, c, PRINTED).bracket for c in (1, 10, 1e3, 1e6)]
    assert brackets[0] < 0.5
    assert all(b2 < b1 for b1, b2 in zip(brackets, brackets[1:]))
    assert brackets[-1] < 1e-2


def test_corrected_record():
    res = self_improve(2, 1, 1)
    assert res.mode == CORRECTED
    assert res.bound_rigorous == pytest.approx(BOUND_CORRECTED_211, rel=1e-11)
    assert res.bound_claimed == pytest.approx(2 ** (66 / 17), rel=1e-13)
    assert not res.rigorous_exceeds_claimed


def test_printed_record_raises_flag():
    res = self_improve(2, 1, 1, PRINTED)
    assert res.bound_rigorous == pytest.approx(BOUND_PRINTED_211, rel=1e-11)
    assert res.bound_claimed == pytest.approx(2 ** (34 / 9), rel=1e-13)
    assert res.rigorous_exceeds_claimed


def test_constant_outside_interval_rejected():
    lo, _ = admissible_interval(2, solve_s(2, 1, 1))
    with pytest.raises(ValueError):
        vasyunin_constant(2, 1, lo - 1e-3, 1)
    with pytest.raises(ValueError):
        vasyunin_constant(2, 1, 2.0, 1)


def test_domain_errors():
    with pytest.raises(ValueError):
        solve_s(1.0, 1, 1)
    with pytest.raises(ValueError):
        solve_s(2, 1, 0.5)
    with pytest.raises(ValueError):
        solve_s(2, 0, 1)


def test_asymptotic_ratio():
    c = 1e6
    ratio = solve_s(2, 1, c) / -scale_a(2, 1, c)
    assert abs(ratio - 1) < 0.02
    assert ratio == pytest.approx(0.9999998125, rel=1e-8)


def test_continuity_at_c_one():
    beta, d = 2.5, 2
    a0 = 2 ** (beta * d / (beta - 1)) * beta ** (beta / (beta - 1))
    limit = beta * (1 + 2 * a0) / (beta + 2 * a0)
    assert improved_exponent(beta, d, 1 + 1e-12) == pytest.approx(limit, rel=1e-10)


def test_large_c_stays_finite():
    res = self_improve(1.2, 3, 1e6)
    assert all(math.isfinite(v) for v in (res.s, res.r, res.C, res.bound_rigorous))
    assert res.bracket >= 0.5


def test_gap_below_double_resolution():
    # beta - r is far below the spacing of doubles at beta, yet stays exact
    beta, d, c = 1.125, 3, 6.0
    gap = exponent_gap(beta, d, c)
    assert 0 < gap < math.ulp(beta)
    a = scale_a(beta, d, c)
    assert gap == pytest.approx(beta * (beta - 1) / (beta + 2 * a), rel=1e-13)
    res = self_improve(beta, d, c)
    assert res.beta_minus_r == gap
    assert res.bracket == pytest.approx(0.5, rel=1e-6)
    assert math.isfinite(res.bound_rigorous)


def test_exponent_gap_matches_difference():
    for mode in (PRINTED, CORRECTED):
        r = improved_exponent(2, 1, 1, mode)
        assert exponent_gap(2, 1, 1, mode) == pytest.approx(2 - r, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(params)
def test_root_solves_equation(p):
    beta, d, c = p
    s = solve_s(beta, d, c)
    target = -beta * d * math.log(2) - math.log(c)
    assert s < 0
    assert abs(log_f(s, beta) - target) <= 1e-12 * max(1.0, abs(target))


@settings(max_examples=100, deadline=None)
@given(params)
def test_double_inequality(p):
    beta, d, c = p
    s = solve_s(beta, d, c)
    # near beta = 1 the lower bound is tight to below double precision (1 + s/A ~ 1e-15)
    lower = -scale_a(beta, d, c) * (1 + DOUBLE_INEQ_RTOL)
    assert lower <= s <= -beta ** (beta / (beta - 1)) * c ** (1 / (beta - 1))


@settings(max_examples=100, deadline=None)
@given(params)
def test_corrected_exponent_is_admissible(p):
    beta, d, c = p
    res = self_improve(beta, d, c)
    assert 0 < res.beta_minus_r < lower_gap(beta, res.s)
    assert 1 < res.r_printed <= res.r_corrected <= beta
    assert res.bracket >= 0.5 - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(1.1, 4.0), st.sampled_from([1, 2, 3]), st.floats(-1e4, -1e-3), st.floats(1e-3, 1e4))
def test_f_increasing(beta, d, s1, gap):
    s2 = min(s1 + gap, 0.0)
    if s2 > s1:
        assert log_f(s1, beta) < log_f(s2, beta)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.1, 4.0), st.sampled_from([1, 2, 3]), st.floats(1.0, 100.0), st.floats(1.01, 10.0),
       st.sampled_from([PRINTED, CORRECTED]))
def test_exponent_gap_shrinks_with_c(beta, d, c, factor, mode):
    # larger characteristics improve less: r moves up towards beta
    assert exponent_gap(beta, d, c * factor, mode) < exponent_gap(beta, d, c, mode)
    assert improved_exponent(beta, d, c * factor, mode) >= improved_exponent(beta, d, c, mode)


def test_verify_constant_weight():
    rep = verify_self_improvement(constant(DyadicGrid(1, 4), 3.0, WEIGHT), 2)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.passed
    assert rep.diagnostics["c"] == pytest.approx(1.0)


def test_verify_two_cell_weight():
    rep = verify_self_improvement(from_values([1, 4], mode=WEIGHT), 2)
    assert rep.diagnostics["c"] == pytest.approx(1.5625, rel=1e-14)
    assert rep.r_star == pytest.approx(improved_exponent(2, 1, 1.5625), rel=1e-14)
    assert rep.passed


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_verify_cascades(beta):
    for seed in range(10):
        w = gen_cascade_weight(DyadicGrid(1, 8), 0.8, seed)
        rep = verify_self_improvement(w, beta)
        assert rep.passed, rep.to_document()
        assert np.isfinite(rep.ratio)
