"""Covariance algebra of the fractional Brownian motion and exact path simulation.

The process X is a centred Gaussian process with X_0 = 0 and
E[(X_t - X_s)^2] = sigma^2 |t - s|^(2H).  Everything here follows from that
variance law; times are dimensionless and the caller owns units.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

# Uniform grids longer than this switch from Cholesky to circulant embedding.
CHOLESKY_MAX_POINTS = 2048


class SimulationError(RuntimeError):
    """Raised when a covariance matrix cannot be factorised."""


@dataclass(frozen=True)
class FbmSpec:
    """Hurst exponent and volatility parameter of an fBm."""

    hurst: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0) or not np.isfinite(self.hurst):
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if not (self.sigma > 0.0) or not np.isfinite(self.sigma):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def increment_variance(self, duration: float) -> float:
        """Variance sigma^2 |duration|^(2H) of an increment of given length."""
        return self.sigma**2 * abs(duration) ** (2.0 * self.hurst)


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing, finite, non-negative observation times."""

    times: tuple[float, ...]

    def __init__(self, times):
        arr = np.asarray(times, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("time grid must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time grid entries must be finite")
        if np.any(arr < 0):
            raise ValueError("time grid entries must be non-negative")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(t) for t in arr))

    @classmethod
    def uniform(cls, n_steps: int, step: float = 1.0, start: float = 0.0) -> "TimeGrid":
        """Grid ``start, start + step, ..., start + n_steps * step``."""
        return cls(start + step * np.arange(n_steps + 1))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times)

    def __len__(self):
        return len(self.times)


def _pow(x, hurst):
    return np.abs(x) ** (2.0 * hurst)


def process_covariance(spec: FbmSpec, t, s):
    """E[X_t X_s] = sigma^2/2 (|t|^2H + |s|^2H - |t - s|^2H).  Broadcasts."""
    H = spec.hurst
    out = 0.5 * spec.sigma**2 * (_pow(t, H) + _pow(s, H) - _pow(np.subtract(t, s), H))
    return float(out) if np.ndim(out) == 0 else out


def increment_covariance(spec: FbmSpec, s, t, u, v):
    """Covariance of X_t - X_s and X_v - X_u for intervals [s, t] and [u, v]."""
    if np.any(np.greater(s, t)) or np.any(np.greater(u, v)):
        raise ValueError("intervals must satisfy s <= t and u <= v")
    H = spec.hurst
    out = 0.5 * spec.sigma**2 * (
        _pow(np.subtract(u, t), H)
        + _pow(np.subtract(v, s), H)
        - _pow(np.subtract(v, t), H)
        - _pow(np.subtract(u, s), H)
    )
    return float(out) if np.ndim(out) == 0 else out


def increment_covariance_matrix(spec: FbmSpec, starts, ends) -> np.ndarray:
    """Covariance matrix of the increments X_{ends[i]} - X_{starts[i]}."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    return increment_covariance(
        spec, starts[:, None], ends[:, None], starts[None, :], ends[None, :]
    )


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """Autocovariance of unit-step, unit-sigma fractional Gaussian noise."""
    k = np.abs(np.asarray(lags, dtype=float))
    return 0.5 * (_pow(k + 1, hurst) - 2 * _pow(k, hurst) + _pow(k - 1, hurst))


def robust_cholesky(cov: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor, with a single jitter retry before giving up."""
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        pass
    jitter = 1e-12 * scale * float(np.max(np.diag(cov)))
    logger.warning("covariance not positive definite; retrying with jitter %.3g", jitter)
    try:
        return linalg.cholesky(cov + jitter * np.eye(cov.shape[0]), lower=True)
    except linalg.LinAlgError as exc:
        raise SimulationError(
            "increment covariance is not positive definite (degenerate grid?)"
        ) from exc


def _uniform_step(times: np.ndarray) -> float | None:
    """Common increment length if the grid is k*step for consecutive k, else None."""
    steps = np.diff(np.concatenate([[0.0], times]))
    if times[0] == 0.0:
        steps = steps[1:]
    if steps.size == 0:
        return None
    if np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
        return float(steps[0])
    return None


def _circulant_fgn(hurst: float, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Davies-Harte exact sampling of ``count`` unit fGn sequences of length n."""
    m = 2 * n
    row = fgn_autocovariance(hurst, np.arange(n + 1))
    circ = np.concatenate([row, row[-2:0:-1]])
    eig = np.fft.fft(circ).real
    if np.min(eig) < -1e-10 * np.max(eig):
        raise SimulationError("circulant embedding produced negative eigenvalues")
    eig = np.clip(eig, 0.0, None)
    z = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
    w = np.fft.fft(np.sqrt(eig / m) * z, axis=1)
    return w.real[:, :n]


def simulate_path(
    spec: FbmSpec,
    grid: TimeGrid,
    seed: int | None = None,
    count: int = 1,
    method: str = "auto",
) -> np.ndarray:
    """Draw ``count`` exact fBm sample paths on ``grid``.

    Returns an array of shape (count, len(grid)).  The first increment is taken
    from time 0, so X is 0 wherever the grid contains 0.  ``method`` is
    ``"cholesky"`` (any grid), ``"circulant"`` (uniform grids only) or
    ``"auto"``, which picks the circulant embedding for long uniform grids.
    Output is deterministic given ``seed``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    times = grid.as_array()
    rng = np.random.default_rng(seed)
    starts = np.concatenate([[0.0], times[:-1]])
    step = _uniform_step(times)

    if method == "auto":
        method = "circulant" if step is not None and times.size > CHOLESKY_MAX_POINTS else "cholesky"

    if method == "circulant":
        if step is None:
            raise ValueError("circulant method needs a grid of consecutive multiples of one step")
        n = int(np.count_nonzero(times > starts))
        noise = _circulant_fgn(spec.hurst, n, count, rng)
        noise *= spec.sigma * step**spec.hurst
        if times[0] == 0.0:
            noise = np.concatenate([np.zeros((count, 1)), noise], axis=1)
        return np.cumsum(noise, axis=1)

    if method != "cholesky":
        raise ValueError(f"unknown simulation method {method!r}")
    # The leading zero-length increment (grid starting at 0) is pinned to 0.
    nonzero = times > starts
    cov = increment_covariance_matrix(spec, starts[nonzero], times[nonzero])
    chol = robust_cholesky(cov, spec.sigma**2)
    incr = np.zeros((count, times.size))
    incr[:, nonzero] = rng.standard_normal((count, int(nonzero.sum()))) @ chol.T
    return np.cumsum(incr, axis=1)
