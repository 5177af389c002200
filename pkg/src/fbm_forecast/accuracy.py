"""Closed-form hit ratios and thresholded (ternary) sign probabilities.

All metrics depend on the predictor only through the Cholesky scalars of the
joint law of (forecast, realised return):  forecast = a U,
realised = a U + b V  with U, V independent standard normals.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .gaussian_analytics import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    integrate_to_infinity,
    normal_cdf,
    normal_pdf,
)
from .predictor import PredictorSolution, forecast

TAYLOR_VALIDITY = 0.5
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class MartingaleError(ValueError):
    """Raised for metrics that are undefined at H = 1/2 (a = 0)."""


@dataclass(frozen=True)
class TernaryProbabilities:
    p_plus: float
    p_minus: float
    p_zero: float
    theta: float

    def __post_init__(self):
        total = self.p_plus + self.p_minus + self.p_zero
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def selectivity(self) -> float:
        """Share of good forecasts among non-zero forecasts."""
        traded = self.p_plus + self.p_minus
        return self.p_plus / traded if traded > 0 else math.nan

    def as_dict(self) -> dict:
        return {"theta": self.theta, "p_plus": self.p_plus, "p_minus": self.p_minus, "p_zero": self.p_zero}


def _require_signal(solution: PredictorSolution):
    if solution.martingale or solution.a <= 0.0:
        raise MartingaleError("metric undefined for H = 1/2 (the forecast is identically zero)")


def hit_ratio(solution: PredictorSolution) -> float:
    """Non-conditional probability that forecast and realised return share a sign."""
    if solution.martingale or solution.a == 0.0:
        return 0.5
    return 0.5 + math.atan2(solution.a, solution.b) / math.pi


def conditional_hit_ratio(solution: PredictorSolution, observed_returns) -> float:
    """N(|forecast(y)| / b), the hit ratio given the observed input returns y."""
    return normal_cdf(abs(forecast(solution, observed_returns)) / solution.b)


def zero_probability(solution: PredictorSolution, theta):
    """p0(theta) = 2 N(theta / a) - 1, exact."""
    _require_signal(solution)
    out = special.erf(np.asarray(theta, dtype=float) / solution.a * _INV_SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def ternary_probabilities_taylor(
    solution: PredictorSolution, theta: float, strict: bool = False
) -> TernaryProbabilities:
    """Small-threshold expansion of p+ and p- (error O(theta^6)); p0 is exact.

    The expansion is only meant for theta / a <= 0.5.  Outside that range a
    RuntimeWarning is emitted, or ValueError when ``strict``.
    """
    _require_signal(solution)
    if theta < 0:
        raise ValueError("theta must be non-negative")
    a, b = solution.a, solution.b
    if theta / a > TAYLOR_VALIDITY:
        msg = f"theta/a = {theta / a:.3g} is outside the expansion's validity range"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    tail = normal_cdf(-theta / a)
    # p+ - p- = 2 D(theta); only even powers of theta survive.
    half_gap = (
        math.atan2(a, b) / math.pi
        - theta**2 / (2.0 * math.pi * a * b)
        + (1.0 / (a * b**3) + 3.0 / (a**3 * b)) * theta**4 / (24.0 * math.pi)
    )
    p_zero = 1.0 - 2.0 * tail
    return TernaryProbabilities(tail + half_gap, tail - half_gap, p_zero, float(theta))


def sign_gap_integral(solution: PredictorSolution, theta: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """int_{theta/a}^inf [N((a/b) u) - N(-(a/b) u)] g(u) du, by quadrature."""
    alpha = solution.a / solution.b
    return integrate_to_infinity(
        lambda u: special.erf(alpha * u * _INV_SQRT2) * normal_pdf(u), theta / solution.a, cfg
    )


def ternary_probabilities_exact(
    solution: PredictorSolution, theta: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE
) -> TernaryProbabilities:
    """p+, p-, p0 from the exact half-line integral representation.

    p+ = N(-theta/a) + D and p- = N(-theta/a) - D, where D is
    :func:`sign_gap_integral`.  p- is integrated directly as
    2 int_{theta/a}^inf N(-(a/b) u) g(u) du, which stays accurate (and
    non-negative) far in the tail where N(-theta/a) - D would cancel.
    """
    _require_signal(solution)
    if theta < 0:
        raise ValueError("theta must be non-negative")
    tail = normal_cdf(-theta / solution.a)
    alpha = solution.a / solution.b
    p_minus = 2.0 * integrate_to_infinity(
        lambda u: normal_cdf(-alpha * u) * normal_pdf(u), theta / solution.a, cfg
    )
    return TernaryProbabilities(2.0 * tail - p_minus, p_minus, 1.0 - 2.0 * tail, float(theta))


def ternary_probabilities(solution: PredictorSolution, theta: float, method: str = "exact", **kwargs):
    if method == "exact":
        return ternary_probabilities_exact(solution, theta, **kwargs)
    if method == "taylor":
        return ternary_probabilities_taylor(solution, theta, **kwargs)
    raise ValueError(f"unknown method {method!r}")


def probability_slopes(solution: PredictorSolution, theta):
    """Analytic derivatives (dp+/dtheta, dp-/dtheta)."""
    _require_signal(solution)
    a, b = solution.a, solution.b
    theta = np.asarray(theta, dtype=float)
    common = -2.0 / a * normal_pdf(theta / a)
    return common * normal_cdf(theta / b), common * normal_cdf(-theta / b)
