"""Rolling estimate -> forecast -> ternary trade pipeline on a sampled series.

At each eligible step t (in sampling steps) the pipeline
  1. estimates (H, sigma) on the trailing window, or uses injected values,
  2. picks lags (naive h, 2h, ..., nh, or the hit-ratio optimal set for H),
  3. forecasts X_{t+h} - X_t from the adjacent lagged returns,
  4. trades sign(forecast) when |forecast| >= theta, flat otherwise,
  5. books position * (X_{t+h} - X_t).
Evaluation windows overlap whenever h > 1; standard errors are therefore
reported both naively and from batch means.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime

import numpy as np

from . import accuracy, strategy
from .fbm_core import FbmSpec
from .hurst_estimation import EstimatorConfig, clamp_hurst, rolling_arrays
from .lag_optimizer import LagOptimizationError, integer_lags, optimize_lags
from .predictor import MARTINGALE_SNAP, LagStructure, solve_predictor

logger = logging.getLogger(__name__)

LAG_MODES = ("naive", "optimal")
THRESHOLD_MODES = ("zero", "optimal")
HURST_REFRESH = 0.01
N_BATCHES = 50


class SeriesFormatError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class ReportMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesRecord:
    timestamp: int | str
    value: float


def _parse_timestamp(raw: str):
    try:
        return int(raw), int(raw)
    except ValueError:
        pass
    # ordering key for ISO-8601 strings; naive and aware stamps are not mixed
    return raw, datetime.fromisoformat(raw)


def load_series(path, format: str = "csv") -> list[SeriesRecord]:
    """Read a ``timestamp,value`` CSV; unsorted or malformed rows are rejected."""
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    records: list[SeriesRecord] = []
    last_key = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["timestamp", "value"]:
            raise SeriesFormatError("line 1: expected header 'timestamp,value'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SeriesFormatError(f"line {line}: expected 2 fields, got {len(row)}")
            try:
                stamp, key = _parse_timestamp(row[0].strip())
            except ValueError:
                raise SeriesFormatError(f"line {line}: unparseable timestamp {row[0]!r}") from None
            try:
                value = float(row[1])
            except ValueError:
                raise SeriesFormatError(f"line {line}: non-numeric value {row[1]!r}") from None
            if not math.isfinite(value):
                raise SeriesFormatError(f"line {line}: non-finite value {row[1]!r}")
            try:
                ordered = last_key is None or key > last_key
            except TypeError:
                raise SeriesFormatError(f"line {line}: timestamp type differs from previous rows") from None
            if not ordered:
                raise SeriesFormatError(f"line {line}: timestamp {row[0]!r} is not strictly increasing")
            last_key = key
            records.append(SeriesRecord(stamp, value))
    return records


def write_series(path, values, timestamps=None):
    """Write values as a ``timestamp,value`` CSV (integer stamps by default)."""
    values = np.asarray(values, dtype=float)
    if timestamps is None:
        timestamps = range(values.size)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "value"])
        for t, v in zip(timestamps, values):
            w.writerow([t, repr(float(v))])


@dataclass(frozen=True)
class BacktestConfig:
    horizon_steps: int = 1
    n_lags: int = 1
    lag_mode: str = "naive"
    threshold_mode: str = "zero"
    lam: float = 0.0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    # set both to bypass estimation (pipeline check on synthetic data)
    known_hurst: float | None = None
    known_sigma: float | None = None

    def __post_init__(self):
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be a positive integer")
        if self.n_lags < 1:
            raise ValueError("n_lags must be a positive integer")
        if self.lag_mode not in LAG_MODES:
            raise ValueError(f"lag_mode must be one of {LAG_MODES}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be a non-negative number")
        if (self.known_hurst is None) != (self.known_sigma is None):
            raise ValueError("known_hurst and known_sigma must be given together")
        if self.known_hurst is not None:
            FbmSpec(self.known_hurst, self.known_sigma)

    @property
    def injected(self) -> bool:
        return self.known_hurst is not None

    @property
    def label(self) -> str:
        return f"{self.lag_mode} lags, {self.threshold_mode} theta"

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Aggregates:
    steps: int
    n_plus: int
    n_minus: int
    n_zero: int
    mean_return: float
    risk: float
    risk_adjusted: float
    hurst_mean: float
    stderr: dict

    @property
    def p_plus(self) -> float:
        return self.n_plus / self.steps

    @property
    def p_minus(self) -> float:
        return self.n_minus / self.steps

    @property
    def p_zero(self) -> float:
        return self.n_zero / self.steps

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(p_plus=self.p_plus, p_minus=self.p_minus, p_zero=self.p_zero)
        return out


@dataclass
class BacktestReport:
    config: BacktestConfig
    series_digest: str
    timestamps: list
    hurst: np.ndarray
    forecast: np.ndarray
    position: np.ndarray
    realized: np.ndarray
    strategy_return: np.ndarray
    aggregates: Aggregates
    seed: int | None = None
    skipped: int = 0
    theory: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "seed": self.seed,
            "series_digest": self.series_digest,
            "skipped_steps": self.skipped,
            "overlapping_evaluation": self.config.horizon_steps > 1,
            "aggregates": self.aggregates.as_dict(),
            "theory": self.theory,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def write_steps_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "hurst", "forecast", "position", "realized", "strategy_return"])
            for row in zip(self.timestamps, self.hurst, self.forecast, self.position, self.realized, self.strategy_return):
                t, h, f, p, r, s = row
                w.writerow([t, repr(float(h)), repr(float(f)), int(p), repr(float(r)), repr(float(s))])


def _as_values(series):
    if len(series) and isinstance(series[0], SeriesRecord):
        return [r.timestamp for r in series], np.array([r.value for r in series], dtype=float)
    values = np.asarray(series, dtype=float)
    return list(range(values.size)), values


def _digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()[:16]


def batch_predictor(hurst: np.ndarray, lags: np.ndarray, horizon: float):
    """Unit-sigma predictor weights and a for many (H, lag set) pairs at once.

    ``lags`` has shape (m, n + 1) with delta_0 in column 0.  Rows with H at 1/2
    get zero weights.  Returns (weights (m, n), a (m,)).
    """
    hurst = np.asarray(hurst, dtype=float)
    lags = np.asarray(lags, dtype=float)
    two_h = (2.0 * hurst)[:, None, None]
    s, e = -lags[:, 1:], -lags[:, :-1]
    p = lambda x: np.abs(x) ** two_h
    sigma_s = 0.5 * (p(s[:, None, :] - e[:, :, None]) + p(e[:, None, :] - s[:, :, None])
                     - p(e[:, None, :] - e[:, :, None]) - p(s[:, None, :] - s[:, :, None]))
    p1 = lambda x: np.abs(x) ** two_h[:, :, 0]
    sigma_rs = 0.5 * (p1(horizon - s) + p1(e) - p1(horizon - e) - p1(s))
    try:
        weights = np.linalg.solve(sigma_s, sigma_rs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        weights = np.zeros_like(sigma_rs)
        for i in range(len(hurst)):
            try:
                weights[i] = np.linalg.solve(sigma_s[i], sigma_rs[i])
            except np.linalg.LinAlgError:
                logger.warning("singular lag covariance at row %d; forecast set to 0", i)
    a2 = np.einsum("ij,ij->i", weights, sigma_rs)
    total2 = float(horizon) ** (2.0 * hurst)
    a = np.sqrt(np.clip(a2, 0.0, total2))
    flat = np.abs(hurst - 0.5) <= MARTINGALE_SNAP
    weights[flat] = 0.0
    a[flat] = 0.0
    return weights, a


class _LagCache:
    """Optimal integer lags, refreshed only when H drifts past HURST_REFRESH.

    Optimisations are memoised on a 0.01 grid of H, so a long run costs at most
    one optimisation per grid cell visited.
    """

    def __init__(self, cfg: BacktestConfig):
        self.cfg = cfg
        self.anchor = None
        self.current = None
        self.memo: dict[int, tuple[int, ...]] = {}

    def naive(self) -> tuple[int, ...]:
        h = self.cfg.horizon_steps
        return tuple(h * (i + 1) for i in range(self.cfg.n_lags))

    def _optimal(self, hurst: float) -> tuple[int, ...]:
        key = int(round(hurst / HURST_REFRESH))
        if key not in self.memo:
            grid_h = key * HURST_REFRESH
            try:
                opt = optimize_lags(FbmSpec(grid_h), float(self.cfg.horizon_steps), self.cfg.n_lags)
                self.memo[key] = integer_lags(opt.lags)
            except (ValueError, LagOptimizationError) as exc:
                logger.info("lag search unavailable at H=%.2f (%s); using naive lags", grid_h, exc)
                self.memo[key] = self.naive()
        return self.memo[key]

    def lags_for(self, hurst: float) -> tuple[int, ...]:
        if self.cfg.lag_mode == "naive":
            return self.naive()
        if self.anchor is None or abs(hurst - self.anchor) > HURST_REFRESH:
            self.anchor = hurst
            self.current = self._optimal(hurst)
        return self.current


def _stderr(x: np.ndarray) -> dict:
    n = x.size
    naive = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    k = min(N_BATCHES, n // 2)
    if k >= 2:
        size = n // k
        means = x[: k * size].reshape(k, size).mean(axis=1)
        batch = float(np.std(means, ddof=1) / math.sqrt(k))
    else:
        batch = math.nan
    return {"naive": naive, "batch_means": batch}


def _aggregate(position, strat, hurst, lam) -> Aggregates:
    n = strat.size
    traded = position != 0
    n_plus = int(np.count_nonzero(traded & (strat > 0)))
    n_zero = int(np.count_nonzero(~traded))
    # a traded step with a zero realised return counts as a miss
    n_minus = n - n_plus - n_zero
    loss = -np.minimum(strat, 0.0)
    mean_ret = float(np.mean(strat))
    risk_val = float(np.mean(loss))
    stderr = {
        "p_plus": _stderr((traded & (strat > 0)).astype(float)),
        "p_minus": _stderr((traded & (strat <= 0)).astype(float)),
        "p_zero": _stderr((~traded).astype(float)),
        "mean_return": _stderr(strat),
        "risk": _stderr(loss),
        "risk_adjusted": _stderr(strat - lam * loss),
    }
    return Aggregates(n, n_plus, n_minus, n_zero, mean_ret, risk_val, mean_ret - lam * risk_val,
                      float(np.mean(hurst)), stderr)


def theoretical_metrics(cfg: BacktestConfig, hurst: float, sigma: float, lags) -> dict:
    """Closed-form counterparts of the aggregates for fixed (H, sigma, lags)."""
    spec = FbmSpec(hurst, sigma)
    sol = solve_predictor(spec, LagStructure.from_durations(float(cfg.horizon_steps), [float(d) for d in lags]))
    if sol.martingale:
        # the forecast is identically zero, so the strategy never trades
        return {"p_plus": 0.0, "p_minus": 0.0, "p_zero": 1.0, "mean_return": 0.0,
                "risk": 0.0, "risk_adjusted": 0.0, "theta": 0.0, "a": 0.0, "b": sol.b}
    theta = strategy.optimal_threshold(sol, cfg.lam)[0] if cfg.threshold_mode == "optimal" else 0.0
    probs = accuracy.ternary_probabilities_exact(sol, theta)
    m = strategy.risk_adjusted_return(sol, theta, cfg.lam)
    return {"p_plus": probs.p_plus, "p_minus": probs.p_minus, "p_zero": probs.p_zero,
            "mean_return": m.expected_return, "risk": m.risk, "risk_adjusted": m.risk_adjusted,
            "theta": theta, "a": sol.a, "b": sol.b}


def run_backtest(series, cfg: BacktestConfig, seed: int | None = None) -> BacktestReport:
    """Roll the pipeline over ``series`` (SeriesRecords or raw values).

    ``seed`` is only echoed in the report; the pipeline itself is deterministic.
    """
    stamps, x = _as_values(series)
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    h = cfg.horizon_steps
    T = cfg.estimator.window_T
    need = T + cfg.n_lags * h + h
    if x.size <= need:
        raise InsufficientDataError(f"series has {x.size} points; need more than {need}")

    steps = np.arange(T, x.size - h)
    if cfg.injected:
        hurst = np.full(steps.size, float(cfg.known_hurst))
        sigma = np.full(steps.size, float(cfg.known_sigma))
    else:
        _, raw_h, raw_s = rolling_arrays(x, cfg.estimator)
        hurst = raw_h[: steps.size]
        sigma = raw_s[: steps.size]

    cache = _LagCache(cfg)
    keep = np.isfinite(hurst) & np.isfinite(sigma) & (sigma > 0)
    lag_rows = np.zeros((steps.size, cfg.n_lags + 1))
    for i in range(steps.size):
        if not keep[i]:
            continue
        hu = clamp_hurst(float(hurst[i]))
        hurst[i] = hu
        lags = cache.lags_for(hu)
        if steps[i] - lags[-1] < 0:
            keep[i] = False
            continue
        lag_rows[i, 1:] = lags
    skipped = int(steps.size - np.count_nonzero(keep))
    if skipped:
        logger.warning("%d steps skipped (estimation failure or lags beyond the data)", skipped)
    if not np.any(keep):
        raise InsufficientDataError("no step could be evaluated")

    steps, hurst, sigma, lag_rows = steps[keep], hurst[keep], sigma[keep], lag_rows[keep]
    weights, unit_a = batch_predictor(hurst, lag_rows, float(h))
    idx = steps[:, None] - lag_rows.astype(int)
    vals = x[idx]
    returns = vals[:, :-1] - vals[:, 1:]
    fc = np.einsum("ij,ij->i", weights, returns)
    realized = x[steps + h] - x[steps]

    if cfg.threshold_mode == "optimal":
        total = sigma * float(h) ** hurst
        share = unit_a / float(h) ** hurst
        theta = np.zeros(steps.size)
        live = share > 0
        if np.any(live):
            theta[live] = total[live] * strategy.unit_optimal_threshold(share[live], cfg.lam)
    else:
        theta = np.zeros(steps.size)
    position = np.where(np.abs(fc) >= theta, np.sign(fc), 0.0).astype(int)
    strat = position * realized

    theory = None
    if cfg.injected:
        lag_set = cache.lags_for(float(cfg.known_hurst))
        theory = theoretical_metrics(cfg, float(cfg.known_hurst), float(cfg.known_sigma), lag_set)
        theory["lags"] = list(lag_set)

    return BacktestReport(
        config=cfg,
        series_digest=_digest(x),
        timestamps=[stamps[i] for i in steps],
        hurst=hurst,
        forecast=fc,
        position=position,
        realized=realized,
        strategy_return=strat,
        aggregates=_aggregate(position, strat, hurst, cfg.lam),
        seed=seed,
        skipped=skipped,
        theory=theory,
    )


COMPARE_COLUMNS = ("p_plus", "p_minus", "p_zero", "mean_return", "risk", "risk_adjusted", "steps")


def compare_reports(a: BacktestReport, b: BacktestReport) -> dict:
    """Side-by-side aggregates keyed by configuration label.

    Rows are dicts, so column order never affects equality.
    """
    if a.series_digest != b.series_digest:
        raise ReportMismatchError("reports come from different series")
    if a.config.horizon_steps != b.config.horizon_steps:
        raise ReportMismatchError("reports use different horizons")
    out = {}
    for rep in (a, b):
        agg = rep.aggregates.as_dict()
        label = rep.config.label
        if label in out and out[label] != {c: agg[c] for c in COMPARE_COLUMNS}:
            label = f"{label} (lambda={rep.config.lam:g})"
        out[label] = {c: agg[c] for c in COMPARE_COLUMNS}
    return out


def format_comparison(table: dict) -> str:
    head = ["config"] + list(COMPARE_COLUMNS)
    lines = [",".join(head)]
    for label, row in table.items():
        lines.append(",".join([label] + [f"{row[c]:.6g}" for c in COMPARE_COLUMNS]))
    return "\n".join(lines)


