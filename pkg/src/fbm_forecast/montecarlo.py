"""Monte Carlo counterparts of the closed-form forecast metrics.

Paths are drawn with :func:`fbm_core.simulate_path` on the handful of dates a
forecast needs (the lagged dates, the current date and t + h), then the
predictor weights are applied to the simulated returns.  Nothing here uses
the scalars a, b, so the estimates are an independent check on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accuracy, strategy
from .fbm_core import simulate_path
from .predictor import PredictorSolution

DEFAULT_CHUNK = 500_000
Z_LIMIT = 3.0


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class VerificationRow:
    metric: str
    theta: float
    theory: float
    empirical: float
    stderr: float

    @property
    def z(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.theory == self.empirical else math.inf
        return (self.empirical - self.theory) / self.stderr

    @property
    def ok(self) -> bool:
        return abs(self.z) <= Z_LIMIT

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "theta": self.theta,
            "theory": self.theory,
            "empirical": self.empirical,
            "stderr": self.stderr,
            "z": self.z,
            "ok": self.ok,
        }


def forecast_pairs(solution: PredictorSolution, trials: int, seed=None, chunk: int = DEFAULT_CHUNK):
    """Yield (forecast, realised return) arrays in chunks, ``trials`` in total."""
    lags = np.asarray(solution.lags.lags)
    h = solution.lags.horizon_h
    now = lags[-1]
    dates = np.unique(np.concatenate([now - lags, [now, now + h]]))
    idx_lag = np.searchsorted(dates, now - lags)
    idx_now = np.searchsorted(dates, now)
    idx_future = np.searchsorted(dates, now + h)
    rng = np.random.default_rng(seed)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        paths = simulate_path(solution.spec, dates, seed=rng, count=m, method="cholesky")
        vals = paths[:, idx_lag]
        returns = vals[:, :-1] - vals[:, 1:]
        yield returns @ solution.weights, paths[:, idx_future] - paths[:, idx_now]
        done += m


def _bernoulli(hits: float, n: int) -> McEstimate:
    p = hits / n
    return McEstimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n)


class _Moments:
    def __init__(self):
        self.n = 0
        self.s1 = 0.0
        self.s2 = 0.0

    def add(self, x: np.ndarray):
        self.n += x.size
        self.s1 += math.fsum(x)
        self.s2 += math.fsum(x * x)

    def estimate(self) -> McEstimate:
        mean = self.s1 / self.n
        var = max(self.s2 / self.n - mean * mean, 0.0) * self.n / max(self.n - 1, 1)
        return McEstimate(mean, math.sqrt(var / self.n), self.n)


def mc_hit_ratio(solution: PredictorSolution, trials: int, seed=None) -> McEstimate:
    """Share of trials where forecast and realised return share a sign.

    Exact ties (a zero forecast, as in the martingale case) count as half a hit.
    """
    hits = 0.0
    for f, r in forecast_pairs(solution, trials, seed):
        prod = f * r
        hits += np.count_nonzero(prod > 0) + 0.5 * np.count_nonzero(prod == 0)
    return _bernoulli(hits, trials)


def mc_strategy(solution: PredictorSolution, thetas, trials: int, seed=None) -> dict:
    """Empirical p+, p-, p0, mean return and mean loss for each threshold.

    Returns ``{theta: {metric: McEstimate}}`` with all thresholds sharing draws.
    """
    thetas = [float(t) for t in np.atleast_1d(thetas)]
    counts = {t: {"p_plus": 0, "p_minus": 0, "p_zero": 0} for t in thetas}
    gains = {t: _Moments() for t in thetas}
    losses = {t: _Moments() for t in thetas}
    for f, r in forecast_pairs(solution, trials, seed):
        for t in thetas:
            position = np.where(np.abs(f) >= t, np.sign(f), 0.0)
            pnl = position * r
            counts[t]["p_plus"] += int(np.count_nonzero(pnl > 0))
            counts[t]["p_minus"] += int(np.count_nonzero(pnl < 0))
            counts[t]["p_zero"] += int(np.count_nonzero(position == 0))
            gains[t].add(pnl)
            losses[t].add(-np.minimum(pnl, 0.0))
    out = {}
    for t in thetas:
        row = {k: _bernoulli(v, trials) for k, v in counts[t].items()}
        row["expected_return"] = gains[t].estimate()
        row["risk"] = losses[t].estimate()
        out[t] = row
    return out


def verify(solution: PredictorSolution, thetas=(0.0,), trials: int = 1_000_000, seed=None) -> list[VerificationRow]:
    """Closed form vs Monte Carlo, one row per (metric, theta)."""
    rows = []
    hit = mc_hit_ratio(solution, trials, seed)
    rows.append(VerificationRow("hit_ratio", 0.0, accuracy.hit_ratio(solution), hit.value, hit.stderr))
    if solution.martingale:
        return rows
    empirical = mc_strategy(solution, thetas, trials, None if seed is None else seed + 1)
    for t, est in empirical.items():
        probs = accuracy.ternary_probabilities_exact(solution, t)
        theory = {
            "p_plus": probs.p_plus,
            "p_minus": probs.p_minus,
            "p_zero": probs.p_zero,
            "expected_return": float(strategy.expected_return(solution, t)),
            "risk": float(strategy.risk(solution, t)),
        }
        for name, value in theory.items():
            rows.append(VerificationRow(name, t, value, est[name].value, est[name].stderr))
    return rows
