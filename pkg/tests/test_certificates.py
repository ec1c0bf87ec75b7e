import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hbpl.certificates import (
    KAPPA_STAR_QG,
    KAPPA_STAR_QSC,
    AlphaRegion,
    RateCertificate,
    alpha_minus,
    alpha_roots,
    compare_factors,
    crossing_kappas,
    delta_cubic,
    delta_for_alpha,
    feasible_alpha_region,
    heavy_ball_factor,
    optimal_damping_convex,
    optimal_damping_nonconvex,
    rate_convex,
    rate_nonconvex,
    tie_alpha,
)
from hbpl.errors import InfeasibleDamping, InvalidConstants, NoFeasibleDelta, VacuousEpsilon

R2 = math.sqrt(2.0)
# oracle values from 30-digit mpmath evaluation of the closed forms
C_KAPPA2 = 2.52240774992748288502953641383
C_GRAD_KAPPA2 = 4.82842712474619009760337744842
C_GAP_KAPPA2 = 2.41421356237309504880168872421

constants = st.tuples(
    st.floats(0.05, 20.0),   # L
    st.floats(1.0, 200.0),   # kappa
    st.floats(0.05, 20.0),   # delta / sqrt(L)
)


def test_region_examples():
    r = feasible_alpha_region(1.0, 1.0, 1.0)
    assert (r.lower_open, r.left_closed_end, r.right_closed_start, r.upper_open) == (1.0, 2.0, 2.0, 3.0)
    assert 1.5 in r and 2.0 in r and 2.9 in r
    assert 1.0 not in r and 3.0 not in r

    r = feasible_alpha_region(2.0, 1.0, R2)
    assert r.lower_open == pytest.approx(R2)
    assert r.left_closed_end == pytest.approx(2 * R2 - 1, rel=1e-15)
    assert r.right_closed_start == pytest.approx(2 * R2 + 1, rel=1e-15)
    assert r.upper_open == pytest.approx(3 * R2)
    assert 2.5 not in r and (2 * R2 - 1) in r and (2 * R2 + 1) in r


def test_region_rejects_bad_constants():
    with pytest.raises(InvalidConstants):
        feasible_alpha_region(1.0, 2.0, 1.0)
    with pytest.raises(InvalidConstants):
        feasible_alpha_region(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        AlphaRegion(2.0, 1.0, 3.0, 4.0)


def test_tie_can_sit_below_alpha_minus():
    lo, _ = alpha_roots(1.0, 1.0, 1.0)
    assert tie_alpha(1.0, 1.0) < lo


@given(constants)
def test_region_sandwich(c):
    L, kappa, ratio = c
    mu, delta = L / kappa, ratio * math.sqrt(L)
    lo, hi = alpha_roots(L, mu, delta)
    t = tie_alpha(L, delta)
    assert t <= hi * (1 + 1e-12)
    assert L / delta < lo
    assert hi < delta + 2 * L / delta


def test_rate_nonconvex_examples():
    c = rate_nonconvex(2.0, 1.0, R2, 2 * R2 - 1)
    assert c.exponent_m == pytest.approx(2 * (R2 - 1), rel=1e-14)
    assert c.constant_C == pytest.approx(C_KAPPA2, rel=1e-14)
    assert c.regime == "theorem-6.1" and c.quantity == "objective-gap"
    opt = optimal_damping_nonconvex(2.0, 1.0)
    assert c.exponent_m == pytest.approx(opt.exponent_m, rel=1e-14)
    assert c.constant_C == pytest.approx(opt.constant_C, rel=1e-14)

    c = rate_nonconvex(1.0, 1.0, 1.0, 2.0)
    assert c.exponent_m == 1.0 and c.constant_C == 2.0


def test_rate_nonconvex_tie_and_errors():
    L, delta = 1.0, 1.0
    t = tie_alpha(L, delta)
    c = rate_nonconvex(L, 1.0, delta, t)
    assert c.constant_C == 1.0
    a = delta + 2 * L / delta - t
    assert c.polynomial_factor == pytest.approx(a)
    assert c.exponent_m == pytest.approx(a)
    assert c.meta["degenerate_tie"]
    assert c.bound(2.0, 1.0) == pytest.approx((1 + 2 * a) * math.exp(-2 * a))
    with pytest.raises(InfeasibleDamping):
        rate_nonconvex(2.0, 1.0, R2, 2.5)
    with pytest.raises(InfeasibleDamping):
        rate_nonconvex(2.0, 1.0, R2, 2.0 / R2)


def test_rate_convex_examples():
    g, f = rate_convex(2.0, 1.0, R2, 2 * R2 - 1)
    assert g.constant_C == pytest.approx(C_GRAD_KAPPA2, rel=1e-14)
    assert f.constant_C == pytest.approx(C_GAP_KAPPA2, rel=1e-14)
    assert g.exponent_m == f.exponent_m == pytest.approx(2 * (R2 - 1))
    assert g.quantity == "grad-norm-sq" and f.quantity == "objective-gap"
    assert f.meta["gap_constant_statement"] == pytest.approx(2 * C_GRAD_KAPPA2)
    kappa = 2.0
    assert g.constant_C == pytest.approx(2 * (1 + math.sqrt(kappa / (kappa - 1))))
    assert f.constant_C == pytest.approx(1 + math.sqrt(kappa / (kappa - 1)))

    g, f = rate_convex(1.0, 1.0, 1.0, 1.9)
    assert f.exponent_m == pytest.approx(1.8)


def test_rate_convex_window():
    with pytest.raises(InfeasibleDamping, match="right endpoint is excluded"):
        rate_convex(1.0, 1.0, 1.0, 2.0)
    # closed endpoint when mu < L
    rate_convex(2.0, 1.0, R2, 2 * R2 - 1)
    with pytest.raises(InfeasibleDamping):
        rate_convex(2.0, 1.0, R2, 2 * R2 - 0.9)
    with pytest.raises(InfeasibleDamping):
        rate_convex(2.0, 1.0, R2, 2.0 / R2)


def test_lipschitz_scaled_constants():
    g, f = rate_convex(4.0, 1.0, 2.0, 4 - math.sqrt(3))
    gs, fs = rate_convex(4.0, 1.0, 2.0, 4 - math.sqrt(3), lipschitz_scaled=True)
    assert gs.constant_C == pytest.approx(4 * g.constant_C)
    assert fs.constant_C == pytest.approx(4 * f.constant_C)
    # unscaled gap constant drops below 1 once L is large: bound fails at t = 0
    _, f = optimal_damping_convex(100.0, 100.0, eps=1.0)
    assert not f.consistent_at_origin
    _, fs = optimal_damping_convex(100.0, 100.0, eps=1.0, lipschitz_scaled=True)
    assert fs.consistent_at_origin


def test_optimal_nonconvex_examples():
    c = optimal_damping_nonconvex(1.0, 1.0, eps=0.1)
    assert c.alpha == pytest.approx(2.07132034355964257320253308631, rel=1e-14)
    assert c.exponent_m == pytest.approx(1.31421356237309504880168872421, rel=1e-14)
    assert c.constant_C == pytest.approx((0.4 + 2 * R2) / 0.1)
    assert c.meta["proof_constant"] == pytest.approx(c.constant_C / 3)
    assert c.regime == "nonconvex-small-kappa"
    minus = optimal_damping_nonconvex(1.0, 1.0, eps=0.1, variant="-")
    assert minus.alpha == pytest.approx(4 / (2 * R2) - 0.05)
    assert minus.exponent_m == c.exponent_m

    c = optimal_damping_nonconvex(2.0, 1.0)
    assert c.alpha == pytest.approx(2 * R2 - 1, rel=1e-14)
    assert c.exponent_m == pytest.approx(2 * (R2 - 1), rel=1e-14)
    assert c.constant_C == pytest.approx(C_KAPPA2, rel=1e-14)
    assert c.regime == "nonconvex-large-kappa"


def test_optimal_nonconvex_errors():
    with pytest.raises(VacuousEpsilon):
        optimal_damping_nonconvex(1.0, 1.0, eps=R2)
    with pytest.raises(VacuousEpsilon):
        optimal_damping_nonconvex(1.0, 1.0)
    with pytest.raises(InvalidConstants):
        optimal_damping_nonconvex(1.0, 2.0)


def test_branch_threshold():
    mu = 1.0
    big = optimal_damping_nonconvex(9 / 8, mu)
    assert big.regime == "nonconvex-large-kappa"
    assert big.constant_C == 1.0 and big.polynomial_factor == pytest.approx(big.exponent_m)
    assert big.exponent_m == pytest.approx(math.sqrt(2 * mu), rel=1e-14)
    eps = 1e-8
    small = optimal_damping_nonconvex(9 / 8 * (1 - 1e-15), mu, eps=eps)
    # the small-kappa exponent is sqrt(2 mu) - eps, so the gap closes linearly in eps
    assert abs(big.exponent_m - small.exponent_m - eps) <= 1e-12


def test_optimal_convex_examples():
    g, f = optimal_damping_convex(1.0, 1.0, eps=0.1)
    assert g.alpha == pytest.approx(1.9)
    assert g.constant_C == pytest.approx(22.0)
    assert f.constant_C == pytest.approx(11.0)
    assert f.exponent_m == pytest.approx(1.8)
    assert f.regime == "convex-kappa-one"

    g, f = optimal_damping_convex(4.0, 1.0)
    assert f.alpha == pytest.approx(2.26794919243112270647255365849, rel=1e-14)
    assert f.constant_C == pytest.approx(2.154700538379251529018297561, rel=1e-14)
    assert f.exponent_m == pytest.approx(optimal_damping_nonconvex(4.0, 1.0).exponent_m, rel=1e-15)
    with pytest.raises(VacuousEpsilon):
        optimal_damping_convex(1.0, 1.0, eps=1.0)


@given(st.floats(1.13, 500.0), st.floats(0.01, 10.0))
def test_general_certificate_matches_closed_form(kappa, mu):
    L = kappa * mu
    d = math.sqrt(L)
    c = rate_nonconvex(L, mu, d, alpha_minus(L, mu, d))
    opt = optimal_damping_nonconvex(L, mu)
    assert c.constant_C == pytest.approx(opt.constant_C, rel=1e-10)
    assert c.exponent_m == pytest.approx(opt.exponent_m, rel=1e-12)


@pytest.mark.parametrize("kappa", [1.2, 2.0, 5.0, 30.0])
def test_optimal_exponent_is_maximal_on_grid(kappa):
    mu = 0.7
    L = kappa * mu
    best = optimal_damping_nonconvex(L, mu).exponent_m
    top = 0.0
    for delta in math.sqrt(L) * np.logspace(-1.5, 1.5, 121):
        lo, hi = alpha_roots(L, mu, delta)
        for alpha in np.concatenate([np.linspace(L / delta, lo, 40)[1:], np.linspace(hi, delta + 2 * L / delta, 40)[:-1]]):
            try:
                top = max(top, rate_nonconvex(L, mu, delta, alpha).exponent_m)
            except InfeasibleDamping:
                pass
    assert top <= best + 1e-9


def test_delta_for_alpha_examples():
    d = delta_for_alpha(2 * R2 - 1, 2.0, 1.0)
    assert d == pytest.approx(R2, rel=1e-12)
    assert delta_cubic(1.0, 2.0, 1.0, 1.0) == 0.0
    with pytest.raises(NoFeasibleDelta):
        delta_for_alpha(2.0, 1.0, 1.0)
    assert delta_for_alpha(2.0, 1.0, 1.0, closed=True) == pytest.approx(1.0, abs=1e-7)
    with pytest.raises(NoFeasibleDelta):
        delta_for_alpha(10.0, 1.0, 1.0)


@given(st.floats(0.1, 10.0), st.floats(1.0, 100.0), st.floats(0.05, 20.0))
def test_delta_for_alpha_right_inverse(L, kappa, ratio):
    mu = L / kappa
    delta = ratio * math.sqrt(L)
    alpha = alpha_minus(L, mu, delta)
    try:
        d = delta_for_alpha(alpha, L, mu)
    except NoFeasibleDelta:
        assume(False)
    assert alpha_minus(L, mu, d) == pytest.approx(alpha, rel=1e-9)
    # the chosen root is at least as good as the one we started from
    assert alpha - L / d >= alpha - L / delta - 1e-9 * alpha


def test_small_alpha_root_beyond_default_bracket():
    # alpha_-(delta) ~ (L + mu) / delta for large delta: the root sits near 20
    d = delta_for_alpha(0.1, 1.0, 1.0)
    assert alpha_minus(1.0, 1.0, d) == pytest.approx(0.1, rel=1e-10)
    assert d > 10


def test_compare_factors_example():
    cmp = compare_factors(1.0, 0.25)
    assert cmp.gradient_flow == 0.5
    assert cmp.heavy_ball == pytest.approx(2 * (2 - math.sqrt(3)) * 0.5)
    assert cmp.winner_vs_gradient_flow == "gradient-flow"
    assert not cmp.gradient_flow_window
    assert cmp.kappa_star_qg == pytest.approx(3.43566017177982128660126654316, rel=1e-15)
    assert cmp.kappa_star_qsc == pytest.approx(1.2071067811865475244008443621, rel=1e-15)
    d = cmp.to_dict()
    assert json.loads(json.dumps(d))["kappa"] == 4.0


def test_crossings_by_bisection():
    k_qg, k_qsc = crossing_kappas()
    assert abs(k_qg - KAPPA_STAR_QG) < 1e-9
    assert abs(k_qsc - KAPPA_STAR_QSC) < 1e-9
    # winners flip across the crossings
    assert compare_factors(1.0, 1 / (KAPPA_STAR_QG - 0.1)).winner_vs_qg == "heavy-ball"
    assert compare_factors(1.0, 1 / (KAPPA_STAR_QG + 0.1)).winner_vs_qg == "qg-unique-minimizer"
    assert compare_factors(1.0, 1 / (KAPPA_STAR_QSC - 0.05)).winner_vs_qsc == "heavy-ball"
    assert compare_factors(1.0, 1 / (KAPPA_STAR_QSC + 0.05)).winner_vs_qsc == "qsc-unique-minimizer"


def test_certificate_serialization_roundtrip():
    c = optimal_damping_nonconvex(3.0, 1.0)
    d = json.loads(json.dumps(c.to_dict()))
    assert set(d) >= {"exponent_m", "constant_C", "alpha", "delta", "regime", "quantity",
                      "epsilon", "polynomial_factor"}
    assert RateCertificate.from_dict(d) == c
    with pytest.raises(ValueError):
        RateCertificate(-1.0, 2.0, 1.0, 1.0, "theorem-6.1")
    with pytest.raises(ValueError):
        RateCertificate(1.0, 2.0, 1.0, 1.0, "bogus")


def test_heavy_ball_factor_stable_for_huge_kappa():
    f = heavy_ball_factor(1e12, 1.0)
    assert f == pytest.approx(2 / (2 * math.sqrt(1e12)), rel=1e-6)
