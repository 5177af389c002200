"""Search for the lag set that maximises the theoretical hit ratio.

The hit ratio 1/2 + arctan(a/b)/pi increases with the explained variance a^2,
so the search maximises a^2 over delta_1 < ... < delta_n with delta_0 = 0.
Lags are parameterised by the logs of consecutive gaps, which keeps them
ordered and positive without constraints.  Work is done at h = 1 and scaled.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .accuracy import hit_ratio
from .fbm_core import FbmSpec
from .predictor import MARTINGALE_SNAP, LagStructure, solve_predictor

MAX_LAGS = 8
N_STARTS = 5
_LADDER_RATIOS = (3.0, 5.0, 8.0)


class LagOptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LagOptimum:
    lags: tuple[float, ...]
    hit_ratio: float
    n: int
    horizon_h: float = 1.0

    def reciprocity(self) -> np.ndarray:
        """delta_i * delta_(n+1-i) / h^2 for each i (1 under the reciprocal-lag law)."""
        d = np.asarray(self.lags)
        return d * d[::-1] / self.horizon_h**2

    def as_dict(self) -> dict:
        return {"n": self.n, "horizon_h": self.horizon_h, "lags": list(self.lags), "hit_ratio": self.hit_ratio}


def thread_count() -> int:
    """Worker cap from FBM_FORECAST_THREADS (0 or unset means one per CPU)."""
    try:
        n = int(os.environ.get("FBM_FORECAST_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def hit_ratio_of_lags(spec: FbmSpec, h: float, lags) -> float:
    """Hit ratio of the predictor built on delta_1..delta_n (delta_0 = 0)."""
    structure = LagStructure.from_durations(h, lags)
    return hit_ratio(solve_predictor(spec, structure))


def _gaps_to_lags(x: np.ndarray) -> np.ndarray:
    return np.cumsum(np.exp(x))


def _lags_to_gaps(d: np.ndarray) -> np.ndarray:
    return np.log(np.diff(np.concatenate([[0.0], d])))


def _explained_variance(d: np.ndarray, hurst: float) -> float:
    """a^2 for unit sigma, h = 1 and lags delta_0 = 0 < d_1 < ... < d_n."""
    lags = np.concatenate([[0.0], d])
    s, e = -lags[1:], -lags[:-1]
    two_h = 2.0 * hurst
    p = lambda x: np.abs(x) ** two_h
    sigma_s = 0.5 * (p(s[None, :] - e[:, None]) + p(e[None, :] - s[:, None])
                     - p(e[None, :] - e[:, None]) - p(s[None, :] - s[:, None]))
    sigma_rs = 0.5 * (p(1.0 - s) + p(e) - p(1.0 - e) - p(s))
    chol = np.linalg.cholesky(sigma_s)
    z = np.linalg.solve(chol, sigma_rs)
    return float(z @ z)


def _objective(x: np.ndarray, hurst: float) -> float:
    d = _gaps_to_lags(x)
    if not np.all(np.isfinite(d)) or np.any(np.diff(np.concatenate([[0.0], d])) <= 0):
        return 1.0
    try:
        return -_explained_variance(d, hurst)
    except np.linalg.LinAlgError:
        # degenerate lags are penalised rather than fatal
        return 1.0


def initial_guesses(n: int, seed: int = 0) -> list[np.ndarray]:
    """Geometric ladders centred on h, plus jittered copies, as log-gap vectors."""
    rng = np.random.default_rng(seed)
    starts = []
    for r in _LADDER_RATIOS:
        starts.append(_lags_to_gaps(r ** (np.arange(n) - (n - 1) / 2.0)))
    while len(starts) < N_STARTS:
        base = starts[len(starts) % len(_LADDER_RATIOS)]
        starts.append(base + rng.normal(scale=0.3, size=n))
    return starts


def _local_search(x0: np.ndarray, spec: FbmSpec):
    res = minimize(
        _objective,
        x0,
        args=(spec.hurst,),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 40000, "maxfev": 40000, "adaptive": len(x0) > 4},
    )
    # restart from the optimum once; a fresh simplex escapes premature collapse
    res2 = minimize(
        _objective,
        res.x,
        args=(spec.hurst,),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 40000, "maxfev": 40000, "adaptive": len(x0) > 4},
    )
    return res2 if res2.fun <= res.fun else res


def optimize_lags(spec: FbmSpec, h: float = 1.0, n: int = 1, seed: int = 0) -> LagOptimum:
    """Lags delta_1* < ... < delta_n* maximising the non-conditional hit ratio."""
    if not 1 <= n <= MAX_LAGS:
        raise ValueError(f"n must be between 1 and {MAX_LAGS}")
    if h <= 0:
        raise ValueError("h must be positive")
    if abs(spec.hurst - 0.5) <= MARTINGALE_SNAP:
        raise ValueError("every lag set is equivalent at H = 1/2")
    starts = initial_guesses(n, seed)
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(starts))) as pool:
        results = list(pool.map(lambda x0: _local_search(x0, spec), starts))
    best = min(results, key=lambda r: r.fun)
    if not np.isfinite(best.fun) or best.fun >= 0.0:
        raise LagOptimizationError("lag search failed to find an informative lag set")
    unit_lags = _gaps_to_lags(best.x)
    rho = hit_ratio_of_lags(spec, 1.0, unit_lags)
    return LagOptimum(tuple(float(d) * h for d in unit_lags), rho, n, float(h))


def integer_lags(lags, minimum: int = 1) -> tuple[int, ...]:
    """Round durations to whole sampling steps, bumping collisions to the next free step."""
    out: list[int] = []
    for d in lags:
        k = max(minimum, int(round(d)))
        if out and k <= out[-1]:
            k = out[-1] + 1
        out.append(k)
    return tuple(out)
