"""Optimal lag tables for H = 0.65 and H = 0.15, with the reciprocal-lag check.

    python3 scripts/reproduce_tables.py [--max-n 6]
"""
import argparse
import time

from fbm_forecast import FbmSpec, optimize_lags


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-n", type=int, default=6)
    args = parser.parse_args()
    for hurst in (0.65, 0.15):
        start = time.perf_counter()
        print(f"H = {hurst}")
        print(f"{'n':>2}  {'rho %':>8}  {'max |d_i d_(n+1-i) - 1|':>24}  lags")
        for n in range(1, args.max_n + 1):
            opt = optimize_lags(FbmSpec(hurst), 1.0, n)
            recip = abs(opt.reciprocity() - 1.0).max()
            lags = " ".join(f"{d:.4f}" for d in opt.lags)
            print(f"{n:>2}  {100 * opt.hit_ratio:8.4f}  {recip:24.2e}  {lags}")
        print(f"({time.perf_counter() - start:.1f}s)\n")


if __name__ == "__main__":
    main()
