"""Expected gain, downside risk and optimal threshold of the ternary strategy.

The strategy is long when the forecast is >= theta, short when it is <= -theta
and flat otherwise; every metric is per forecast period h.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .accuracy import _require_signal
from .gaussian_analytics import normal_cdf, normal_pdf
from .predictor import PredictorSolution

GRID_POINTS = 64
GRID_SPAN = 10.0
GOLDEN_ITERATIONS = 90
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class ThresholdSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategyMetrics:
    expected_return: float
    risk: float
    risk_adjusted: float
    lam: float
    theta: float

    def as_dict(self) -> dict:
        return asdict(self)


def _expected_return(a, theta):
    return 2.0 * a * normal_pdf(theta / a)


def _risk(a, b, total, theta):
    return (
        -2.0 * a * normal_cdf(-theta / b) * normal_pdf(theta / a)
        + _SQRT_2_OVER_PI * total * normal_cdf(-theta * np.sqrt(1.0 / a**2 + 1.0 / b**2))
    )


def _risk_adjusted(a, b, total, theta, lam):
    return _expected_return(a, theta) - lam * _risk(a, b, total, theta)


def expected_return(solution: PredictorSolution, theta):
    """Mean strategy return 2 a g(theta / a)."""
    _require_signal(solution)
    return _expected_return(solution.a, theta)


def risk(solution: PredictorSolution, theta):
    """Lower absolute semi-deviation -E[min(0, strategy return)]."""
    _require_signal(solution)
    return _risk(solution.a, solution.b, solution.total_std, theta)


def risk_adjusted_return(solution: PredictorSolution, theta: float, lam: float) -> StrategyMetrics:
    gain = float(expected_return(solution, theta))
    loss = float(risk(solution, theta))
    return StrategyMetrics(gain, loss, gain - lam * loss, float(lam), float(theta))


def _golden(f, lo, hi, iterations=GOLDEN_ITERATIONS):
    """Vectorised golden-section maximisation of f on [lo, hi]."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iterations):
        x1 = hi - _INVPHI * (hi - lo)
        x2 = lo + _INVPHI * (hi - lo)
        left = f(x1) >= f(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    return 0.5 * (lo + hi)


def unit_optimal_threshold(signal_share, lam: float) -> np.ndarray:
    """theta* for a unit-variance target, given a / (sigma h^H).

    Scaling a and b by c scales the risk-adjusted curve as c f(theta / c), so
    theta* = sigma h^H * unit_optimal_threshold(a / (sigma h^H), lambda).
    Search: 64-point grid on [0, 10a], widened while the maximum sits on the
    upper edge, then golden section on the bracketing cell.  Returns exactly 0
    when the curve is maximal at 0 with a non-positive initial slope.
    """
    u = np.atleast_1d(np.asarray(signal_share, dtype=float))
    if np.any((u <= 0) | (u >= 1)):
        raise ThresholdSearchError("a / (sigma h^H) must lie in (0, 1)")
    b = np.sqrt(1.0 - u * u)
    f = lambda th, a=u, b=b: _risk_adjusted(a, b, 1.0, th, lam)

    span = GRID_SPAN * u
    steps = np.linspace(0.0, 1.0, GRID_POINTS)
    for _ in range(8):
        grid = span[:, None] * steps[None, :]
        vals = _risk_adjusted(u[:, None], b[:, None], 1.0, grid, lam)
        k = np.argmax(vals, axis=1)
        at_edge = k == GRID_POINTS - 1
        if not np.any(at_edge):
            break
        span = np.where(at_edge, 2.0 * span, span)
    else:
        raise ThresholdSearchError("risk-adjusted return keeps increasing; no maximum found")

    cell = span / (GRID_POINTS - 1)
    lo = np.maximum(k - 1, 0) * cell
    hi = (k + 1) * cell
    theta = _golden(f, lo, hi)
    # initial slope of the risk-adjusted curve is lambda * b / (pi * a)
    flat_start = (k == 0) & (lam * b <= 0.0)
    theta = np.where(flat_start, 0.0, theta)
    theta = np.where(theta < 0.0, 0.0, theta)
    if np.any(~np.isfinite(theta)):
        raise ThresholdSearchError("threshold search produced a non-finite value")
    return theta


def optimal_threshold(solution: PredictorSolution, lam: float) -> tuple[float, StrategyMetrics]:
    """theta*_lambda = argmax_{theta >= 0} of expected return - lambda * risk."""
    _require_signal(solution)
    total = solution.total_std
    theta = float(unit_optimal_threshold(solution.a / total, lam)[0]) * total
    return theta, risk_adjusted_return(solution, theta, lam)


def risk_adjusted_curve(solution: PredictorSolution, thetas, lam: float) -> np.ndarray:
    """R_lambda(theta) on an array of thresholds (plot-ready)."""
    _require_signal(solution)
    return _risk_adjusted(solution.a, solution.b, solution.total_std, np.asarray(thetas, dtype=float), lam)
