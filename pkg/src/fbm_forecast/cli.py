"""Command-line front end: ``python -m fbm_forecast <subcommand> ...``.

Human output uses 6 significant digits; ``--json`` switches to full-precision
JSON.  Module failures exit with status 1 and a single ``error: ...`` line on
stderr; usage errors exit with status 2 (argparse).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import accuracy, montecarlo, strategy
from .backtest import BacktestConfig, load_series, run_backtest
from .fbm_core import FbmSpec, TimeGrid, simulate_path
from .hurst_estimation import EstimatorConfig, rolling_arrays
from .lag_optimizer import MAX_LAGS, optimize_lags
from .predictor import LagStructure, solve_predictor

TABLE_HURST = {"1": 0.65, "2": 0.15}
TABLE_ROWS = 6


# -- argument types ---------------------------------------------------------

def _number(kind, lo=None, hi=None, lo_open=True, hi_open=True):
    def parse(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if isinstance(x, float) and not math.isfinite(x):
            raise argparse.ArgumentTypeError(f"value must be finite: {text!r}")
        if lo is not None and (x < lo or (lo_open and x == lo)):
            raise argparse.ArgumentTypeError(f"value {text} out of range")
        if hi is not None and (x > hi or (hi_open and x == hi)):
            raise argparse.ArgumentTypeError(f"value {text} out of range")
        return x
    return parse


hurst_type = _number(float, 0.0, 1.0)
positive_float = _number(float, 0.0)
nonneg_float = _number(float, 0.0, lo_open=False)
positive_int = _number(int, 0)


def lag_list(text):
    try:
        lags = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lags must be comma-separated numbers: {text!r}") from None
    if not lags or any(not (math.isfinite(d) and d > 0) for d in lags):
        raise argparse.ArgumentTypeError("lags must be positive")
    return lags


# -- output helpers ---------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, np.generic):
        return x.item()
    return x


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_mapping(args, data: dict):
    if args.json:
        _emit(args, json.dumps(_jsonable(data), indent=2))
    else:
        _emit(args, "\n".join(f"{k}: {_fmt(v)}" for k, v in data.items()))


def _emit_rows(args, rows: list[dict], columns):
    if args.json:
        _emit(args, json.dumps(_jsonable(rows), indent=2))
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) if r.get(c) is not None else "" for c in columns])
    _emit(args, buf.getvalue())


def _solution(args):
    spec = FbmSpec(args.hurst, args.sigma)
    return solve_predictor(spec, LagStructure.from_durations(args.h, args.lags, args.delta0))


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args):
    grid = TimeGrid.uniform(args.steps, args.dt)
    paths = simulate_path(FbmSpec(args.hurst, args.sigma), grid, seed=args.seed, count=args.count, method=args.method)
    times = grid.as_array()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.count == 1:
        w.writerow(["timestamp", "value"])
        stamps = range(times.size) if args.dt == 1.0 else times
        for t, v in zip(stamps, paths[0]):
            w.writerow([t if isinstance(t, int) else repr(float(t)), repr(float(v))])
    else:
        w.writerow(["timestamp"] + [f"path_{k}" for k in range(args.count)])
        for i, t in enumerate(times):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in paths[:, i]])
    _emit(args, buf.getvalue())


def cmd_hit_ratio(args):
    sol = _solution(args)
    _emit_mapping(args, {
        "hit_ratio": accuracy.hit_ratio(sol),
        "a": sol.a,
        "b": sol.b,
        "weights": list(sol.weights),
    })


def cmd_optimal_lags(args):
    opt = optimize_lags(FbmSpec(args.hurst, args.sigma), args.h, args.n, seed=args.seed)
    out = opt.as_dict()
    out["reciprocity"] = list(opt.reciprocity())
    # LagOptimum is always reported as JSON
    _emit(args, json.dumps(_jsonable(out), indent=2))


def _theta(args, sol):
    return args.theta * sol.a if args.theta_units == "a" else args.theta


def cmd_ternary(args):
    sol = _solution(args)
    theta = _theta(args, sol)
    probs = accuracy.ternary_probabilities(sol, theta, method=args.method)
    out = probs.as_dict()
    out["selectivity"] = probs.selectivity
    _emit_mapping(args, out)


def cmd_optimal_theta(args):
    sol = _solution(args)
    theta, metrics = strategy.optimal_threshold(sol, args.lam)
    probs = accuracy.ternary_probabilities_exact(sol, theta)
    out = {"theta": theta, "theta_over_a": theta / sol.a}
    out.update(metrics.as_dict())
    out.update(p_plus=probs.p_plus, p_minus=probs.p_minus, p_zero=probs.p_zero)
    _emit_mapping(args, out)


def cmd_estimate_hurst(args):
    records = load_series(args.input)
    values = np.array([r.value for r in records])
    cfg = EstimatorConfig(args.window, args.tau1, args.tau2)
    idx, hurst, sigma = rolling_arrays(values, cfg)
    rows = [
        {"timestamp": records[i].timestamp, "hurst": float(hu), "sigma": float(s)}
        for i, hu, s in zip(idx, hurst, sigma)
        if math.isfinite(hu)
    ]
    _emit_rows(args, rows, ["timestamp", "hurst", "sigma"])


BACKTEST_KEYS = {
    "horizon": positive_int,
    "n_lags": positive_int,
    "lag_mode": str,
    "threshold_mode": str,
    "lam": nonneg_float,
    "window": positive_int,
    "tau1": positive_int,
    "tau2": positive_int,
    "known_hurst": hurst_type,
    "known_sigma": positive_float,
    "seed": int,
    "input": str,
}
BACKTEST_DEFAULTS = {"horizon": 1, "n_lags": 1, "lag_mode": "naive", "threshold_mode": "zero", "lam": 0.0,
                     "window": 504, "tau1": 1, "tau2": 2}
_KEY_ALIASES = {"lambda": "lam", "horizon_steps": "horizon", "window_t": "window"}


class ConfigFileError(ValueError):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment; keys mirror the flags."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigFileError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_").lower()
            key = _KEY_ALIASES.get(key, key)
            if key not in BACKTEST_KEYS:
                raise ConfigFileError(f"{path}:{n}: unknown key {key!r}")
            try:
                out[key] = BACKTEST_KEYS[key](value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigFileError(f"{path}:{n}: {exc}") from None
    return out


def backtest_settings(args) -> dict:
    settings = dict(BACKTEST_DEFAULTS)
    if args.config:
        settings.update(read_config(args.config))
    for key in BACKTEST_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def cmd_backtest(args):
    s = backtest_settings(args)
    if not s.get("input"):
        raise ValueError("backtest needs --input (or input= in the config file)")
    cfg = BacktestConfig(
        horizon_steps=s["horizon"],
        n_lags=s["n_lags"],
        lag_mode=s["lag_mode"],
        threshold_mode=s["threshold_mode"],
        lam=s["lam"],
        estimator=EstimatorConfig(s["window"], s["tau1"], s["tau2"]),
        known_hurst=s.get("known_hurst"),
        known_sigma=s.get("known_sigma"),
    )
    report = run_backtest(load_series(s["input"]), cfg, seed=s.get("seed"))
    if args.steps_csv:
        report.write_steps_csv(args.steps_csv)
    # the report is JSON in both modes
    _emit(args, json.dumps(_jsonable(report.to_dict()), indent=2))


def cmd_mc_verify(args):
    spec = FbmSpec(args.hurst, args.sigma)
    if args.lags:
        lags = args.lags
    else:
        lags = list(optimize_lags(spec, args.h, args.n).lags) if args.hurst != 0.5 else [args.h * (i + 1) for i in range(args.n)]
    sol = solve_predictor(spec, LagStructure.from_durations(args.h, lags))
    thetas = [m * sol.a for m in args.theta_multiples]
    rows = montecarlo.verify(sol, thetas, args.trials, seed=args.seed)
    out = []
    for r in rows:
        d = r.as_dict()
        d["theta_over_a"] = r.theta / sol.a if sol.a > 0 else 0.0
        out.append(d)
    _emit_rows(args, out, ["metric", "theta_over_a", "theory", "empirical", "stderr", "z", "ok"])


def table_rows(which: str) -> list[dict]:
    spec = FbmSpec(TABLE_HURST[which])
    rows = []
    for n in range(1, TABLE_ROWS + 1):
        opt = optimize_lags(spec, 1.0, n)
        row = {"n": n, "rho_pct": 100.0 * opt.hit_ratio}
        for i, d in enumerate(opt.lags, 1):
            row[f"delta_{i}"] = d
        rows.append(row)
    return rows


def cmd_tables(args):
    rows = table_rows(args.which)
    _emit_rows(args, rows, ["n"] + [f"delta_{i}" for i in range(1, TABLE_ROWS + 1)] + ["rho_pct"])


# -- parser -----------------------------------------------------------------

def _common(p, json_flag=True):
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    if json_flag:
        p.add_argument("--json", action="store_true", help="full-precision JSON output")


def _model(p, lags=True):
    p.add_argument("--hurst", type=hurst_type, required=True)
    p.add_argument("--sigma", type=positive_float, default=1.0)
    p.add_argument("--h", type=positive_float, default=1.0, help="forecast horizon")
    if lags:
        p.add_argument("--lags", type=lag_list, default=None, help="delta_1,...,delta_n (default: h)")
        p.add_argument("--delta0", type=nonneg_float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbm-forecast", description="Forecasting fractional Brownian motion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="exact fBm sample paths as CSV")
    p.add_argument("--hurst", type=hurst_type, required=True)
    p.add_argument("--sigma", type=positive_float, default=1.0)
    p.add_argument("--steps", type=positive_int, required=True)
    p.add_argument("--dt", type=positive_float, default=1.0)
    p.add_argument("--count", type=positive_int, default=1)
    p.add_argument("--method", choices=["auto", "cholesky", "circulant"], default="auto")
    p.add_argument("--seed", type=int, default=None)
    _common(p, json_flag=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hit-ratio", help="closed-form hit ratio")
    _model(p)
    _common(p)
    p.set_defaults(func=cmd_hit_ratio)

    p = sub.add_parser("optimal-lags", help="hit-ratio maximising lags (JSON)")
    p.add_argument("--hurst", type=hurst_type, required=True)
    p.add_argument("--sigma", type=positive_float, default=1.0)
    p.add_argument("--h", type=positive_float, default=1.0)
    p.add_argument("--n", type=_number(int, 1, MAX_LAGS, lo_open=False, hi_open=False), required=True)
    p.add_argument("--seed", type=int, default=0)
    _common(p, json_flag=False)
    p.set_defaults(func=cmd_optimal_lags)

    p = sub.add_parser("ternary", help="thresholded sign probabilities")
    _model(p)
    p.add_argument("--theta", type=nonneg_float, required=True)
    p.add_argument("--theta-units", choices=["abs", "a"], default="abs", help="theta absolute or in units of a")
    p.add_argument("--method", choices=["exact", "taylor"], default="exact")
    _common(p)
    p.set_defaults(func=cmd_ternary)

    p = sub.add_parser("optimal-theta", help="risk-adjusted optimal threshold")
    _model(p)
    p.add_argument("--lambda", dest="lam", type=nonneg_float, required=True)
    _common(p)
    p.set_defaults(func=cmd_optimal_theta)

    p = sub.add_parser("estimate-hurst", help="rolling Hurst estimates as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--window", type=positive_int, default=504)
    p.add_argument("--tau1", type=positive_int, default=1)
    p.add_argument("--tau2", type=positive_int, default=2)
    _common(p)
    p.set_defaults(func=cmd_estimate_hurst)

    p = sub.add_parser("backtest", help="rolling pipeline report (JSON)")
    p.add_argument("--input")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--horizon", type=positive_int)
    p.add_argument("--n-lags", dest="n_lags", type=positive_int)
    p.add_argument("--lag-mode", dest="lag_mode", choices=["naive", "optimal"])
    p.add_argument("--threshold-mode", dest="threshold_mode", choices=["zero", "optimal"])
    p.add_argument("--lambda", dest="lam", type=nonneg_float)
    p.add_argument("--window", type=positive_int)
    p.add_argument("--tau1", type=positive_int)
    p.add_argument("--tau2", type=positive_int)
    p.add_argument("--known-hurst", dest="known_hurst", type=hurst_type)
    p.add_argument("--known-sigma", dest="known_sigma", type=positive_float)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps-csv", help="also write per-step records here")
    _common(p, json_flag=False)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("mc-verify", help="closed forms vs Monte Carlo")
    _model(p)
    p.add_argument("--n", type=_number(int, 1, MAX_LAGS, lo_open=False, hi_open=False), default=1)
    p.add_argument("--trials", type=positive_int, default=1_000_000)
    p.add_argument("--theta-multiples", type=lambda t: [nonneg_float(v) for v in t.split(",")],
                   default=[0.0, 0.5, 1.0, 2.0], help="thresholds in units of a")
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("tables", help="optimal-lag tables as CSV")
    p.add_argument("--which", choices=sorted(TABLE_HURST), required=True)
    _common(p)
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "lags", "absent") is None:
        args.lags = [args.h] if args.command != "mc-verify" else None
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - every module failure maps to exit 1
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
