"""Backtest the forecasting strategy on a simulated fBm path.

Runs naive and optimal lags with zero and optimal thresholds, both with the
true parameters injected and with rolling estimation, and prints a table.

    python3 scripts/synthetic_backtest.py --hurst 0.65 --steps 50000 --seed 3
"""
import argparse

from fbm_forecast import FbmSpec, TimeGrid, simulate_path
from fbm_forecast.backtest import BacktestConfig, compare_reports, format_comparison, run_backtest


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--hurst", type=float, default=0.65)
    parser.add_argument("--steps", type=int, default=50_000)
    parser.add_argument("--lags", type=int, default=2)
    parser.add_argument("--lam", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()
    x = simulate_path(FbmSpec(args.hurst), TimeGrid.uniform(args.steps), seed=args.seed)[0]
    for injected in (True, False):
        extra = {"known_hurst": args.hurst, "known_sigma": 1.0} if injected else {}
        reports = [
            run_backtest(x, BacktestConfig(n_lags=args.lags, lag_mode=lm, threshold_mode=tm, lam=args.lam, **extra))
            for lm in ("naive", "optimal")
            for tm in ("zero", "optimal")
        ]
        table = {}
        for r in reports[1:]:
            table.update(compare_reports(reports[0], r))
        print("known parameters" if injected else "estimated parameters")
        print(format_comparison(table))
        print()


if __name__ == "__main__":
    main()
