import numpy as np
import pytest

from fbm_forecast.fbm_core import FbmSpec
from fbm_forecast.montecarlo import VerificationRow, forecast_pairs, mc_hit_ratio, mc_strategy, verify
from fbm_forecast.predictor import LagStructure, solve_predictor


def _sol(h, lags=(1.0,), horizon=1.0, delta0=0.0):
    return solve_predictor(FbmSpec(h), LagStructure.from_durations(horizon, lags, delta0))


def test_pairs_have_model_moments():
    sol = _sol(0.3, (0.5, 2.0))
    f, r = next(forecast_pairs(sol, 200_000, seed=1))
    assert np.var(f) == pytest.approx(sol.a**2, rel=0.02)
    assert np.var(r) == pytest.approx(sol.total_std**2, rel=0.02)
    # residual is orthogonal to the forecast
    assert abs(np.mean(f * (r - f))) < 4 * np.std(f * (r - f)) / np.sqrt(f.size)


def test_chunking_does_not_change_draws():
    sol = _sol(0.65)
    whole = np.concatenate([f for f, _ in forecast_pairs(sol, 10_000, seed=3, chunk=10_000)])
    parts = np.concatenate([f for f, _ in forecast_pairs(sol, 10_000, seed=3, chunk=3_000)])
    assert np.array_equal(whole, parts)


def test_deterministic():
    sol = _sol(0.15)
    assert mc_hit_ratio(sol, 50_000, seed=4) == mc_hit_ratio(sol, 50_000, seed=4)


def test_martingale_hit_ratio_is_half():
    sol = _sol(0.5)
    assert mc_hit_ratio(sol, 10_000, seed=0).value == 0.5
    rows = verify(sol, trials=10_000, seed=0)
    assert len(rows) == 1 and rows[0].ok


def test_nonzero_delta0():
    sol = _sol(0.7, (1.5, 4.0), horizon=2.0, delta0=0.5)
    rows = verify(sol, [0.0, sol.a], 200_000, seed=8)
    assert all(abs(r.z) < 4 for r in rows)


def test_counts_are_consistent():
    sol = _sol(0.65)
    est = mc_strategy(sol, [0.0, 0.1], 20_000, seed=2)
    for row in est.values():
        assert row["p_plus"].value + row["p_minus"].value + row["p_zero"].value == pytest.approx(1.0)
        assert row["risk"].value >= 0


def test_row_scoring():
    row = VerificationRow("x", 0.0, 1.0, 1.25, 0.1)
    assert row.z == pytest.approx(2.5)
    assert row.ok
    assert not VerificationRow("x", 0.0, 1.0, 1.31, 0.1).ok
    assert VerificationRow("x", 0.0, 0.0, 0.0, 0.0).ok
    assert not VerificationRow("x", 0.0, 0.0, 1e-3, 0.0).ok
    assert set(row.as_dict()) == {"metric", "theta", "theory", "empirical", "stderr", "z", "ok"}
