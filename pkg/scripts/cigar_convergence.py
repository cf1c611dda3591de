#!/usr/bin/env python3
"""Cigar-type BER-flat spaces for a list of m, compared with the tanh limit.

Prints mu = 4/(m-1), the sup of |psi_m - tanh| on [0, t_max] and m times that
distance, which should level off at a constant.
"""
import argparse

import numpy as np

from qesmms.cli import parse_m_list
from qesmms.families import cigar_mu, cigar_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-values", default="log:3:1e4:8")
    ap.add_argument("--t-max", type=float, default=10.0)
    args = ap.parse_args()
    print(f"{'m':>12} {'mu':>12} {'sup|psi-tanh|':>15} {'m*dist':>10} {'first integral':>15}")
    for m in parse_m_list(args.m_values):
        t = cigar_solve(m, t_max=args.t_max)
        r, psi = t.columns["r"], t.columns["psi"]
        dist = float(np.max(np.abs(psi - np.tanh(r))))
        integ = float(np.nanmax(np.abs(t.columns["integrability_residual"])))
        scaled = dist * m.value if m.is_finite else float("nan")
        print(f"{m.value:12.4g} {cigar_mu(m):12.6g} {dist:15.3e} {scaled:10.4f} {integ:15.2e}")


if __name__ == "__main__":
    main()
