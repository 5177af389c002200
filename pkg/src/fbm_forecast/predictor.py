"""MSE-optimal linear prediction of a future fBm increment from lagged increments."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .fbm_core import FbmSpec, increment_covariance, increment_covariance_matrix

MARTINGALE_SNAP = 1e-10
CONDITION_WARN = 1e12


class SingularLagsError(ValueError):
    """The lagged-return covariance matrix cannot be factorised."""


@dataclass(frozen=True)
class LagStructure:
    """Forecast horizon h and increasing lags delta_0 < ... < delta_n.

    The predictor inputs are the adjacent returns R_{t-delta_i, t-delta_{i-1}}
    for i = 1..n.
    """

    horizon_h: float
    lags: tuple[float, ...]

    def __init__(self, horizon_h: float, lags):
        lags = tuple(float(d) for d in lags)
        if not horizon_h > 0:
            raise ValueError(f"horizon must be positive, got {horizon_h}")
        if len(lags) < 2:
            raise ValueError("need delta_0 plus at least one lag")
        if lags[0] < 0:
            raise ValueError("delta_0 must be non-negative")
        if any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError(f"lags must be strictly increasing, got {lags}")
        if not all(math.isfinite(d) for d in lags):
            raise ValueError("lags must be finite")
        object.__setattr__(self, "horizon_h", float(horizon_h))
        object.__setattr__(self, "lags", lags)

    @classmethod
    def from_durations(cls, horizon_h: float, lags, delta0: float = 0.0) -> "LagStructure":
        """Build from delta_1..delta_n with delta_0 prepended (0 by default)."""
        return cls(horizon_h, (delta0, *lags))

    @property
    def n(self) -> int:
        return len(self.lags) - 1

    def return_intervals(self) -> tuple[np.ndarray, np.ndarray]:
        """(starts, ends) of the n input returns, relative to the current time 0."""
        d = np.asarray(self.lags)
        return -d[1:], -d[:-1]


@dataclass(frozen=True)
class PredictorSolution:
    weights: np.ndarray
    a: float
    b: float
    mse: float
    spec: FbmSpec
    lags: LagStructure
    condition_number: float = 1.0
    martingale: bool = False

    @property
    def total_std(self) -> float:
        """Standard deviation sigma h^H of the target return (= sqrt(a^2 + b^2))."""
        return self.spec.sigma * self.lags.horizon_h**self.spec.hurst

    @property
    def n(self) -> int:
        return len(self.weights)


def _martingale_solution(spec: FbmSpec, lags: LagStructure) -> PredictorSolution:
    var = spec.sigma**2 * lags.horizon_h
    return PredictorSolution(
        weights=np.zeros(lags.n),
        a=0.0,
        b=math.sqrt(var),
        mse=var,
        spec=FbmSpec(0.5, spec.sigma),
        lags=lags,
        martingale=True,
    )


def covariance_blocks(spec: FbmSpec, lags: LagStructure) -> tuple[np.ndarray, np.ndarray, float]:
    """Sigma_S, Sigma_RS and Sigma_R for the adjacent-return inputs."""
    starts, ends = lags.return_intervals()
    sigma_s = increment_covariance_matrix(spec, starts, ends)
    sigma_rs = increment_covariance(spec, 0.0, lags.horizon_h, starts, ends)
    sigma_r = spec.increment_variance(lags.horizon_h)
    return sigma_s, np.atleast_1d(sigma_rs), sigma_r


def solve_predictor(spec: FbmSpec, lags: LagStructure) -> PredictorSolution:
    """Weights beta = Sigma_RS Sigma_S^-1 and the Cholesky scalars a, b.

    For H within 1e-10 of 1/2 the exact zero-weight martingale solution is
    returned without a matrix solve.
    """
    if abs(spec.hurst - 0.5) <= MARTINGALE_SNAP:
        return _martingale_solution(spec, lags)
    sigma_s, sigma_rs, sigma_r = covariance_blocks(spec, lags)
    try:
        factor = linalg.cho_factor(sigma_s, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularLagsError(f"Sigma_S is singular for lags {lags.lags}") from exc
    weights = linalg.cho_solve(factor, sigma_rs)
    eig = np.linalg.eigvalsh(sigma_s)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    if cond > CONDITION_WARN:
        warnings.warn(f"Sigma_S is ill-conditioned (cond={cond:.3g})", RuntimeWarning, stacklevel=2)
    explained = float(sigma_rs @ weights)
    # explained variance cannot exceed the target variance; clip rounding noise
    explained = min(max(explained, 0.0), sigma_r)
    mse = sigma_r - explained
    return PredictorSolution(
        weights=weights,
        a=math.sqrt(explained),
        b=math.sqrt(mse),
        mse=mse,
        spec=spec,
        lags=lags,
        condition_number=cond,
    )


def beta1_closed_form(spec: FbmSpec, h: float, delta1: float) -> float:
    """Single-lag weight 1/2 [ (h/d + 1)^2H - (h/d)^2H - 1 ]."""
    if h <= 0 or delta1 <= 0:
        raise ValueError("h and delta1 must be positive")
    r = h / delta1
    two_h = 2.0 * spec.hurst
    return 0.5 * ((r + 1.0) ** two_h - r**two_h - 1.0)


def forecast(solution: PredictorSolution, observed_returns) -> float:
    """sum_i beta_i r_i, with r ordered (R_{t-d1,t-d0}, ..., R_{t-dn,t-d(n-1)})."""
    r = np.asarray(observed_returns, dtype=float)
    if r.shape[-1] != solution.n:
        raise ValueError(f"expected {solution.n} returns, got {r.shape[-1]}")
    out = r @ solution.weights
    return float(out) if np.ndim(out) == 0 else out


def adjacent_to_anchored_weights(solution: PredictorSolution, lags: LagStructure | None = None) -> np.ndarray:
    """Weights on anchored returns R_{t-delta_i, t-delta_0} giving the same forecast.

    The adjacent return R_{t-d_i, t-d_(i-1)} is the difference of two anchored
    returns, so the weights telescope to beta_i - beta_(i+1).
    """
    lags = lags or solution.lags
    if lags.n != solution.n:
        raise ValueError("lag structure does not match the solution")
    beta = np.asarray(solution.weights, dtype=float)
    return beta - np.append(beta[1:], 0.0)


def adjacent_returns(path_values, times, t: float, lags: LagStructure) -> np.ndarray:
    """Adjacent input returns read off a path sampled at ``times``.

    ``times`` must contain every t - delta_i exactly.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(path_values, dtype=float)
    points = t - np.asarray(lags.lags)
    idx = np.searchsorted(times, points)
    if np.any(idx >= times.size) or not np.allclose(times[idx], points):
        raise ValueError("path is not observed at every lagged time")
    vals = x[..., idx]
    return vals[..., :-1] - vals[..., 1:]
