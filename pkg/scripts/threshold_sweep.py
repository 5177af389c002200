"""Risk-adjusted return curves and optimal thresholds across risk aversion.

Writes a CSV with theta/a, p+, p-, p0, expected return, risk and the
risk-adjusted return for each lambda, then prints theta*(lambda).

    python3 scripts/threshold_sweep.py --hurst 0.65 -o sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from fbm_forecast import FbmSpec, LagStructure, solve_predictor
from fbm_forecast.accuracy import ternary_probabilities_exact
from fbm_forecast.strategy import expected_return, optimal_threshold, risk

LAMBDAS = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--hurst", type=float, default=0.65)
    parser.add_argument("--points", type=int, default=41)
    parser.add_argument("--max-multiple", type=float, default=3.0, help="largest theta in units of a")
    parser.add_argument("-o", "--output")
    args = parser.parse_args()

    sol = solve_predictor(FbmSpec(args.hurst), LagStructure.from_durations(1.0, [1.0]))
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out)
    writer.writerow(["theta_over_a", "p_plus", "p_minus", "p_zero", "expected_return", "risk"]
                    + [f"adjusted_lambda_{lam:g}" for lam in LAMBDAS])
    for k in np.linspace(0.0, args.max_multiple, args.points):
        th = k * sol.a
        p = ternary_probabilities_exact(sol, th)
        r, s = float(expected_return(sol, th)), float(risk(sol, th))
        writer.writerow([f"{k:.4f}", f"{p.p_plus:.6f}", f"{p.p_minus:.6f}", f"{p.p_zero:.6f}", f"{r:.6f}", f"{s:.6f}"]
                        + [f"{r - lam * s:.6f}" for lam in LAMBDAS])
    if args.output:
        out.close()
    print(f"H={args.hurst}: a={sol.a:.6f}, b={sol.b:.6f}", file=sys.stderr)
    for lam in LAMBDAS:
        th, m = optimal_threshold(sol, lam)
        print(f"  lambda={lam:<5g} theta*={th:.5f} ({th / sol.a:.3f} a)  adjusted={m.risk_adjusted:.6f}", file=sys.stderr)


if __name__ == "__main__":
    main()
