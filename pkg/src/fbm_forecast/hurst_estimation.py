"""Rolling Hurst-exponent estimation from the scaling of increment variances.

In a window [t - T, t], increments of duration tau have variance
sigma^2 tau^(2H), so comparing the mean squared increments at two durations
tau1 and tau2 identifies H:

    H_t = log( (T - tau2) S1 / ((T - tau1) S2) ) / (2 log(tau1 / tau2)),

with S_k the sum of squared tau_k-increments inside the window.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

HURST_CLAMP = (0.01, 0.99)


class EstimationError(ValueError):
    """The window carries no variation (or is out of bounds)."""


@dataclass(frozen=True)
class EstimatorConfig:
    window_T: int = 504
    tau1: int = 1
    tau2: int = 2

    def __post_init__(self):
        if self.window_T < 1 or self.tau1 < 1 or self.tau2 < 1:
            raise ValueError("window and durations must be positive integers")
        if self.tau1 == self.tau2:
            raise ValueError("tau1 and tau2 must differ")
        if max(self.tau1, self.tau2) >= self.window_T / 4:
            raise ValueError("durations must be below window_T / 4")


@dataclass(frozen=True)
class HurstEstimate:
    index: int
    hurst: float
    sigma: float

    @property
    def in_range(self) -> bool:
        return 0.0 < self.hurst < 1.0


def clamp_hurst(h: float) -> float:
    """Clamp a raw estimate into the range used to build predictors."""
    return min(max(h, HURST_CLAMP[0]), HURST_CLAMP[1])


def _window_sums(series: np.ndarray, cfg: EstimatorConfig, t_index: int) -> tuple[float, float]:
    window = series[t_index - cfg.window_T : t_index + 1]
    s1 = float(np.sum((window[cfg.tau1 :] - window[: -cfg.tau1]) ** 2))
    s2 = float(np.sum((window[cfg.tau2 :] - window[: -cfg.tau2]) ** 2))
    return s1, s2


def _estimate(s1, s2, cfg: EstimatorConfig):
    T, t1, t2 = cfg.window_T, cfg.tau1, cfg.tau2
    num = np.log((T - t2) * np.asarray(s1)) - np.log((T - t1) * np.asarray(s2))
    hurst = num / (2.0 * (math.log(t1) - math.log(t2)))
    # sigma from the mean squared tau1-increment over its T - tau1 + 1 terms
    sigma = np.sqrt(np.asarray(s1) / (T - t1 + 1) / float(t1) ** (2.0 * hurst))
    return hurst, sigma


def estimate_hurst(series, cfg: EstimatorConfig = EstimatorConfig(), t_index: int | None = None) -> HurstEstimate:
    """Raw (unclamped) estimate of H and sigma from the window ending at ``t_index``.

    The window holds the T + 1 observations ``series[t_index - T .. t_index]``.
    """
    x = np.asarray(series, dtype=float)
    if t_index is None:
        t_index = x.size - 1
    if t_index < cfg.window_T or t_index >= x.size:
        raise EstimationError(f"window ending at {t_index} is out of bounds")
    window = x[t_index - cfg.window_T : t_index + 1]
    if not np.all(np.isfinite(window)):
        raise EstimationError("window contains missing values")
    s1, s2 = _window_sums(x, cfg, t_index)
    if s1 <= 0.0 or s2 <= 0.0:
        raise EstimationError("constant window: increment variance is zero")
    hurst, sigma = _estimate(s1, s2, cfg)
    return HurstEstimate(t_index, float(hurst), float(sigma))


def rolling_hurst(series, cfg: EstimatorConfig = EstimatorConfig()) -> list[HurstEstimate]:
    """One raw estimate per index t >= T; failed windows are skipped and logged."""
    x = np.asarray(series, dtype=float)
    if x.size <= cfg.window_T:
        return []
    out_idx, h, s = rolling_arrays(x, cfg)
    ok = np.isfinite(h)
    if not np.all(ok):
        logger.warning("%d windows could not be estimated", int((~ok).sum()))
    out = [HurstEstimate(int(i), float(a), float(b)) for i, a, b in zip(out_idx[ok], h[ok], s[ok])]
    n_out = sum(not e.in_range for e in out)
    if n_out:
        logger.warning("%d raw estimates fall outside (0, 1)", n_out)
    return out


def rolling_arrays(series, cfg: EstimatorConfig = EstimatorConfig()):
    """Vectorised rolling estimates as (indices, hurst, sigma); NaN marks failed windows.

    Sums are taken per window rather than by differencing prefix sums, which
    would lose precision on long series.
    """
    x = np.asarray(series, dtype=float)
    T = cfg.window_T
    idx = np.arange(T, x.size)
    if idx.size == 0:
        return idx, np.empty(0), np.empty(0)
    sums = []
    for tau in (cfg.tau1, cfg.tau2):
        sq = (x[tau:] - x[:-tau]) ** 2
        # squared increment ending at j sits at sq[j - tau]; window needs j in [t-T+tau, t]
        sums.append(_windowed(sq, T - tau + 1))
    s1, s2 = sums
    with np.errstate(divide="ignore", invalid="ignore"):
        hurst, sigma = _estimate(s1, s2, cfg)
    # NaNs inside a window propagate through its sums
    hurst = np.where((s1 > 0) & (s2 > 0), hurst, np.nan)
    sigma = np.where(np.isfinite(hurst), sigma, np.nan)
    return idx, hurst, sigma


def _windowed(values: np.ndarray, width: int) -> np.ndarray:
    out = np.empty(values.size - width + 1)
    view = np.lib.stride_tricks.sliding_window_view(values, width)
    for start in range(0, out.size, 4096):
        out[start : start + 4096] = view[start : start + 4096].sum(axis=1)
    return out
