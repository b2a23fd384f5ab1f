"""Solve the Cobb-Douglas Edgeworth box over a sweep of preference weights.

Prints the solver's price next to the closed form (1 - a1, a2) / (1 - a1 + a2).
"""

from __future__ import annotations

import argparse

import numpy as np

from mreelab.generate import edgeworth_cd, edgeworth_price
from mreelab.walras import solve_state_equilibrium


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha2", type=float, default=0.5)
    ap.add_argument("--points", type=int, default=9)
    args = ap.parse_args()
    print(f"{'alpha1':>7} {'p1 solver':>18} {'p1 closed form':>18} {'|err|':>9} {'iters':>6}")
    for a1 in np.linspace(0.1, 0.9, args.points):
        eq = solve_state_equilibrium(edgeworth_cd(a1, args.alpha2), 0)
        ref = edgeworth_price(a1, args.alpha2)
        err = float(np.abs(eq.price.p - ref).max())
        print(f"{a1:7.3f} {eq.price.p[0]:18.15f} {ref[0]:18.15f} {err:9.1e} {eq.iterations:6d}")


if __name__ == "__main__":
    main()
