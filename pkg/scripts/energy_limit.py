#!/usr/bin/env python3
"""Large-m behaviour of the energy on a round 2-sphere with a fixed potential.

With v = e^{-phi/m}, the bracket W^m - (m + 2n) Vol approaches W^inf at rate
1/m when mu = 1; other values of mu are shown for contrast.
"""
import argparse
import math

from qesmms import profiles as P
from qesmms.variational import energy_limit_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--amp", type=float, default=0.3, help="phi = amp cos r")
    ap.add_argument("--mu", type=float, nargs="+", default=[1.0, 0.5])
    args = ap.parse_args()
    for mu in args.mu:
        tab = energy_limit_check(2, (0.0, math.pi), P.sin(), P.cos(args.amp), mu=mu, ms=(1e1, 1e2, 1e3, 1e4), poles=("left", "right"))
        print(f"mu={mu}: W^inf={tab.limit:.12f} decreasing={tab.decreasing}")
        for m, b, e, c in zip(tab.ms, tab.brackets, tab.errors, tab.constants):
            print(f"  m={m:8.0f} bracket={b:.12f} error={e:.3e} m*error={c:.4f}")


if __name__ == "__main__":
    main()
