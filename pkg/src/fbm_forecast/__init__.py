"""Forecasting fractional Brownian motion in discrete time.

Covariance-based predictor, closed-form hit ratios and ternary-strategy
metrics, optimal lags and thresholds, rolling Hurst estimation and a backtest
pipeline, with Monte Carlo counterparts for checking the closed forms.
"""
from .accuracy import (
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
from .backtest import BacktestConfig, BacktestReport, SeriesRecord, compare_reports, load_series, run_backtest
from .fbm_core import FbmSpec, TimeGrid, increment_covariance, process_covariance, simulate_path
from .hurst_estimation import EstimatorConfig, HurstEstimate, estimate_hurst, rolling_hurst
from .lag_optimizer import LagOptimum, integer_lags, optimize_lags
from .predictor import LagStructure, PredictorSolution, forecast, solve_predictor
from .strategy import StrategyMetrics, expected_return, optimal_threshold, risk, risk_adjusted_return

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "EstimatorConfig",
    "FbmSpec",
    "HurstEstimate",
    "LagOptimum",
    "LagStructure",
    "MartingaleError",
    "PredictorSolution",
    "SeriesRecord",
    "StrategyMetrics",
    "TernaryProbabilities",
    "TimeGrid",
    "compare_reports",
    "conditional_hit_ratio",
    "estimate_hurst",
    "expected_return",
    "forecast",
    "hit_ratio",
    "increment_covariance",
    "integer_lags",
    "load_series",
    "optimal_threshold",
    "optimize_lags",
    "probability_slopes",
    "process_covariance",
    "risk",
    "risk_adjusted_return",
    "rolling_hurst",
    "run_backtest",
    "simulate_path",
    "solve_predictor",
    "ternary_probabilities",
    "ternary_probabilities_exact",
    "ternary_probabilities_taylor",
    "zero_probability",
]
