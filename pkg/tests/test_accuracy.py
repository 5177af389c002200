import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_forecast.accuracy import (
    MartingaleError,
    TernaryProbabilities,
    conditional_hit_ratio,
    hit_ratio,
    probability_slopes,
    ternary_probabilities,
    ternary_probabilities_exact,
    ternary_probabilities_taylor,
    zero_probability,
)
from fbm_forecast.fbm_core import FbmSpec
from fbm_forecast.gaussian_analytics import normal_cdf
from fbm_forecast.montecarlo import mc_strategy
from fbm_forecast.predictor import LagStructure, solve_predictor


def _sol(h, lags=(1.0,), horizon=1.0, sigma=1.0):
    return solve_predictor(FbmSpec(h, sigma), LagStructure.from_durations(horizon, lags))


hursts = st.floats(0.05, 0.95).filter(lambda h: abs(h - 0.5) > 1e-3)


def test_ternary_type_invariants():
    with pytest.raises(ValueError):
        TernaryProbabilities(0.5, 0.5, 0.1, 0.0)
    p = TernaryProbabilities(0.3, 0.2, 0.5, 1.0)
    assert p.selectivity == pytest.approx(0.6)
    assert math.isnan(TernaryProbabilities(0.0, 0.0, 1.0, 9.0).selectivity)


def test_hit_ratio_examples(sol_065, sol_015):
    assert hit_ratio(sol_065) == pytest.approx(0.5742, abs=5e-5)
    assert hit_ratio(sol_015) == pytest.approx(0.6256, abs=5e-5)
    assert hit_ratio(_sol(0.5)) == 0.5


@given(hursts, st.floats(0.1, 5), st.floats(0.1, 5))
def test_hit_ratio_equivalent_forms(h, sigma, horizon):
    sol = _sol(h, (horizon,), horizon, sigma)
    total2 = sigma**2 * horizon ** (2 * h)
    alt = 1 - math.atan(math.sqrt(total2 / sol.a**2 - 1)) / math.pi
    assert hit_ratio(sol) == pytest.approx(alt, abs=1e-12)
    assert 0.5 < hit_ratio(sol) < 1.0


def test_conditional_hit_ratio(sol_065):
    assert conditional_hit_ratio(_sol(0.5), [0.3]) == 0.5
    assert conditional_hit_ratio(sol_065, [0.0]) == 0.5
    y = sol_065.b / sol_065.weights[0]
    assert conditional_hit_ratio(sol_065, [y]) == pytest.approx(0.841345, abs=1e-6)
    assert conditional_hit_ratio(sol_065, [-y]) == pytest.approx(0.841345, abs=1e-6)


def test_taylor_examples(sol_065):
    rho = hit_ratio(sol_065)
    p = ternary_probabilities_taylor(sol_065, 0.0)
    assert (p.p_plus, p.p_minus, p.p_zero) == pytest.approx((rho, 1 - rho, 0.0), abs=1e-15)
    with pytest.warns(RuntimeWarning):
        p = ternary_probabilities_taylor(sol_065, sol_065.a)
    assert p.p_zero == pytest.approx(0.682689, abs=1e-6)
    with pytest.warns(RuntimeWarning):
        p = ternary_probabilities_taylor(sol_065, 50 * sol_065.a)
    assert p.p_zero > 1 - 1e-12
    with pytest.raises(ValueError):
        ternary_probabilities_taylor(sol_065, sol_065.a, strict=True)


def test_martingale_rejected():
    with pytest.raises(MartingaleError):
        ternary_probabilities_taylor(_sol(0.5), 0.1)
    with pytest.raises(MartingaleError):
        ternary_probabilities_exact(_sol(0.5), 0.1)
    with pytest.raises(MartingaleError):
        zero_probability(_sol(0.5), 0.1)


def test_negative_theta_rejected(sol_065):
    with pytest.raises(ValueError):
        ternary_probabilities_exact(sol_065, -0.1)
    with pytest.raises(ValueError):
        ternary_probabilities(sol_065, 0.1, method="bogus")


def test_exact_examples(sol_065):
    p0 = ternary_probabilities_exact(sol_065, 0.0)
    assert p0.p_plus == pytest.approx(hit_ratio(sol_065), abs=1e-12)
    assert p0.p_zero == 0.0
    th = 0.05 * sol_065.a
    exact = ternary_probabilities_exact(sol_065, th)
    taylor = ternary_probabilities_taylor(sol_065, th)
    assert exact.p_plus == pytest.approx(taylor.p_plus, abs=1e-6)
    assert exact.p_minus == pytest.approx(taylor.p_minus, abs=1e-6)


@given(hursts, st.floats(0.0, 6.0), st.sampled_from([(1.0,), (0.3, 3.0), (0.2, 1.0, 5.0)]))
def test_exact_probability_identities(h, k, lags):
    sol = _sol(h, lags)
    th = k * sol.a
    p = ternary_probabilities_exact(sol, th)
    assert p.p_plus + p.p_minus == pytest.approx(2 * normal_cdf(-th / sol.a), abs=1e-12)
    assert p.p_zero == pytest.approx(zero_probability(sol, th), abs=1e-15)
    assert 0 <= p.p_minus <= p.p_plus <= 1


@pytest.mark.parametrize("h", [0.15, 0.65, 0.85])
def test_monotonicity(h):
    sol = _sol(h)
    grid = np.linspace(0, 4 * sol.a, 41)
    probs = [ternary_probabilities_exact(sol, t) for t in grid]
    dp_plus = np.diff([p.p_plus for p in probs])
    dp_minus = np.diff([p.p_minus for p in probs])
    assert np.all(dp_plus <= dp_minus + 1e-15)
    assert np.all(dp_minus <= 1e-15)


def test_analytic_slopes_match_finite_differences(sol_065):
    eps = 1e-6
    for k in (0.0, 0.4, 1.0, 2.5):
        th = k * sol_065.a + eps
        up = ternary_probabilities_exact(sol_065, th + eps)
        dn = ternary_probabilities_exact(sol_065, th - eps)
        s_plus, s_minus = probability_slopes(sol_065, th)
        assert (up.p_plus - dn.p_plus) / (2 * eps) == pytest.approx(s_plus, abs=1e-6)
        assert (up.p_minus - dn.p_minus) / (2 * eps) == pytest.approx(s_minus, abs=1e-6)


def test_selectivity(sol_065):
    base = ternary_probabilities_exact(sol_065, 0.0).p_plus
    sel = [ternary_probabilities_exact(sol_065, k * sol_065.a).selectivity for k in (0.5, 1, 2, 5)]
    assert all(s >= base for s in sel)
    assert np.all(np.diff(sel) > 0)
    assert ternary_probabilities_exact(sol_065, 10 * sol_065.a).selectivity > 0.99


@pytest.mark.parametrize("h", [0.6, 0.7, 0.8])
def test_hurst_asymmetry(h):
    assert hit_ratio(_sol(h)) > hit_ratio(_sol(1 - h))


@pytest.mark.parametrize("h", [0.15, 0.65])
@pytest.mark.parametrize("c", [2, 5, 10])
def test_lag_ratio_symmetry(h, c):
    assert hit_ratio(_sol(h, (float(c),))) == pytest.approx(hit_ratio(_sol(h, (1.0 / c,))), abs=1e-10)


def test_ternary_monte_carlo_two_lags():
    sol = _sol(0.3, (0.5, 2.0))
    thetas = [0.0, sol.a]
    est = mc_strategy(sol, thetas, 300_000, seed=77)
    for th in thetas:
        exact = ternary_probabilities_exact(sol, th)
        for name in ("p_plus", "p_minus", "p_zero"):
            e = est[th][name]
            assert abs(e.value - getattr(exact, name)) <= 3 * e.stderr + 1e-12


def test_taylor_is_opt_in(sol_065):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ternary_probabilities(sol_065, 0.1 * sol_065.a) == ternary_probabilities_exact(sol_065, 0.1 * sol_065.a)
        ternary_probabilities(sol_065, 0.1 * sol_065.a, method="taylor")


@pytest.mark.parametrize("k", [0.0, 0.3, 1.0, 2.0])
def test_direct_p_minus_matches_gap_form(sol_065, k):
    from fbm_forecast.accuracy import sign_gap_integral

    th = k * sol_065.a
    tail = normal_cdf(-th / sol_065.a)
    p = ternary_probabilities_exact(sol_065, th)
    assert p.p_minus == pytest.approx(tail - sign_gap_integral(sol_065, th), abs=1e-13)
