import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_forecast.fbm_core import (
    FbmSpec,
    SimulationError,
    TimeGrid,
    fgn_autocovariance,
    increment_covariance,
    increment_covariance_matrix,
    process_covariance,
    robust_cholesky,
    simulate_path,
)

hursts = st.floats(0.02, 0.98)
sigmas = st.floats(0.1, 5.0)
times = st.floats(0.0, 50.0)


def test_spec_validation():
    for bad in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, -1.0), (float("nan"), 1.0)]:
        with pytest.raises(ValueError):
            FbmSpec(*bad)
    assert FbmSpec(0.3, 2.0).increment_variance(2.0) == pytest.approx(4.0 * 2.0**0.6)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid([0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([-1.0, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([])
    assert len(TimeGrid.uniform(10)) == 11


def test_process_covariance_examples():
    assert process_covariance(FbmSpec(0.5), 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert process_covariance(FbmSpec(0.37, 2.0), 0.0, 3.3) == 0.0
    # 1/2 (2^1.3 + 1 - 1)
    assert process_covariance(FbmSpec(0.65), 2.0, 1.0) == pytest.approx(0.5 * 2**1.3, rel=1e-14)
    assert process_covariance(FbmSpec(0.65), 2.0, 1.0) == pytest.approx(1.231144, abs=1e-6)


def test_process_covariance_monte_carlo():
    spec = FbmSpec(0.65)
    x = simulate_path(spec, [1.0, 2.0], seed=3, count=400_000)
    emp = np.mean(x[:, 0] * x[:, 1])
    # Var of the product of two unit-ish Gaussians bounds the standard error
    se = np.std(x[:, 0] * x[:, 1]) / np.sqrt(x.shape[0])
    assert abs(emp - process_covariance(spec, 2.0, 1.0)) < 4 * se


def test_increment_covariance_examples():
    assert increment_covariance(FbmSpec(0.5), 0, 1, 1, 2) == pytest.approx(0.0, abs=1e-15)
    assert increment_covariance(FbmSpec(0.65), 0, 1, 1, 2) == pytest.approx(0.5 * (2**1.3 - 2), rel=1e-13)
    assert increment_covariance(FbmSpec(0.65), 0, 1, 1, 2) == pytest.approx(0.231144, abs=1e-6)
    assert increment_covariance(FbmSpec(0.65), 0, 1, 0, 1) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        increment_covariance(FbmSpec(0.65), 1, 0, 0, 1)
    with pytest.raises(ValueError):
        increment_covariance(FbmSpec(0.65), 0, 1, 2, 1)


def test_increment_covariance_monte_carlo():
    spec = FbmSpec(0.65)
    x = simulate_path(spec, [1.0, 2.0], seed=11, count=1_000_000)
    r1, r2 = x[:, 0], x[:, 1] - x[:, 0]
    prod = r1 * r2
    se = prod.std() / np.sqrt(prod.size)
    assert abs(prod.mean() - 0.5 * (2**1.3 - 2)) < 3.5 * se


@given(hursts, sigmas, times, st.floats(0.01, 10), times, st.floats(0.01, 10))
def test_increment_covariance_symmetry(h, sig, s, ds, u, du):
    spec = FbmSpec(h, sig)
    a = increment_covariance(spec, s, s + ds, u, u + du)
    b = increment_covariance(spec, u, u + du, s, s + ds)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@given(hursts, sigmas, times, st.floats(0.001, 10))
def test_increment_variance_diagonal(h, sig, s, ds):
    spec = FbmSpec(h, sig)
    assert increment_covariance(spec, s, s + ds, s, s + ds) == pytest.approx(sig**2 * ds ** (2 * h), rel=1e-9)


@given(hursts, st.integers(1, 40))
def test_fgn_autocovariance_matches_increment_covariance(h, k):
    spec = FbmSpec(h)
    assert fgn_autocovariance(h, np.array([k]))[0] == pytest.approx(
        increment_covariance(spec, 0, 1, k, k + 1), rel=1e-9, abs=1e-12
    )


def test_increment_matrix_is_positive_definite():
    spec = FbmSpec(0.2)
    t = np.linspace(0.0, 5.0, 41)
    cov = increment_covariance_matrix(spec, t[:-1], t[1:])
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_simulate_variance_bm():
    x = simulate_path(FbmSpec(0.5), TimeGrid.uniform(2), seed=0, count=100_000)
    assert x[:, 0].max() == 0.0 and x[:, 0].min() == 0.0
    assert abs(np.var(x[:, 1]) - 1.0) < 0.02


def test_simulate_variance_rough():
    x = simulate_path(FbmSpec(0.3), TimeGrid.uniform(2), seed=1, count=100_000)
    assert np.var(x[:, 2]) == pytest.approx(2**0.6, rel=0.02)


def test_simulate_deterministic():
    spec = FbmSpec(0.7, 1.3)
    a = simulate_path(spec, TimeGrid.uniform(50, 0.1), seed=42, count=3)
    b = simulate_path(spec, TimeGrid.uniform(50, 0.1), seed=42, count=3)
    assert np.array_equal(a, b)
    c = simulate_path(spec, TimeGrid.uniform(3000), seed=42, count=2)
    d = simulate_path(spec, TimeGrid.uniform(3000), seed=42, count=2)
    assert np.array_equal(c, d)


def test_self_similarity():
    h = 0.7
    x = simulate_path(FbmSpec(h), [1.0, 3.0], seed=5, count=200_000)
    ratio = np.var(x[:, 1]) / np.var(x[:, 0])
    assert ratio == pytest.approx(3 ** (2 * h), rel=0.03)


def test_stationary_increments():
    x = simulate_path(FbmSpec(0.25), TimeGrid.uniform(12), seed=8, count=100_000)
    v_early = np.var(x[:, 3] - x[:, 1])
    v_late = np.var(x[:, 11] - x[:, 9])
    assert v_early == pytest.approx(v_late, rel=0.03)
    assert v_early == pytest.approx(2**0.5, rel=0.03)


@pytest.mark.parametrize("h", [0.15, 0.5, 0.8])
def test_circulant_matches_cholesky_in_law(h):
    grid = TimeGrid.uniform(64)
    a = simulate_path(FbmSpec(h), grid, seed=1, count=20_000, method="circulant")
    b = simulate_path(FbmSpec(h), grid, seed=2, count=20_000, method="cholesky")
    for k in (1, 7, 64):
        assert np.var(a[:, k]) == pytest.approx(k ** (2 * h), rel=0.05)
        assert np.var(b[:, k]) == pytest.approx(k ** (2 * h), rel=0.05)
    # lag-1 increment correlation
    rho = 0.5 * (2 ** (2 * h) - 2)
    da = np.diff(a, axis=1)
    assert np.corrcoef(da[:, 10], da[:, 11])[0, 1] == pytest.approx(rho, abs=0.03)


def test_circulant_requires_uniform_grid():
    with pytest.raises(ValueError):
        simulate_path(FbmSpec(0.6), [0.0, 1.0, 3.0], method="circulant")


def test_cholesky_failure_is_reported():
    with pytest.raises(SimulationError):
        robust_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0)
    # singular PSD matrix is rescued by the single jitter step
    chol = robust_cholesky(np.ones((2, 2)), 1.0)
    assert np.all(np.isfinite(chol))
