#!/usr/bin/env python3
"""Shoot the Böhm and Bryant orbits and report their asymptotics.

For finite m the slope (psi')^2 should approach (n-2)/(m+n-2); at m = +inf
the tail exponent of psi^2 should be close to 1.
"""
import argparse
import time

import numpy as np

from qesmms.families import bohm_bryant_solve, bryant_asymptotics_check, epsilon_independence, linearization_eigenvalues


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", default="3:2,4:3,5:10,3:+inf,4:+inf")
    ap.add_argument("--offsets", action="store_true", help="also compare eps and eps/10 runs")
    args = ap.parse_args()
    for case in args.cases.split(","):
        n_txt, m = case.split(":")
        n = int(n_txt)
        t0 = time.perf_counter()
        traj = bohm_bryant_solve(n, m)
        dt = time.perf_counter() - t0
        ev = linearization_eigenvalues(n, m)
        mono = int(np.sum(np.diff(traj.columns["log_kappa"]) >= 0))
        line = f"n={n} m={m:>5} {traj.family:6s} steps={len(traj.t):6d} time={dt:6.2f}s eig={np.round(ev, 6)} kappa-violations={mono}"
        if traj.m.is_finite:
            c = traj.constants
            rel = abs(c["asymptotic_slope_sq"] - c["predicted_slope_sq"]) / c["predicted_slope_sq"]
            line += f" slope^2={c['asymptotic_slope_sq']:.6f} predicted={c['predicted_slope_sq']:.6f} rel={rel:.1e}"
        else:
            fit = bryant_asymptotics_check(traj)
            line += f" tail exponent={fit['exponent']:.4f} X/Y^2={fit['ratio_X_over_Y2']:.5f} (limit {fit['ratio_limit']:.5f})"
        if args.offsets:
            line += f" eps-dependence={epsilon_independence(n, m):.1e}"
        print(line)


if __name__ == "__main__":
    main()
