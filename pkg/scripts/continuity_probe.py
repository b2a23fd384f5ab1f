"""Hausdorff distances of the aggregate preferred set along p_n = p* + 2^-n (1, -1).

Uses the Cobb-Douglas Edgeworth box and prints one row per n for each
requested resolution, so grid effects can be compared side by side.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mreelab.aggregate import continuity_probe
from mreelab.generate import edgeworth_cd
from mreelab.walras import solve_state_equilibrium


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=float, nargs="+", default=[1e-3])
    ap.add_argument("--steps", type=int, default=12)
    ap.add_argument("--first", type=int, default=1, help="smallest n")
    args = ap.parse_args()
    E = edgeworth_cd(0.6, 0.5)
    p = solve_state_equilibrium(E, 0).price.p
    ns = list(range(args.first, args.steps + 1))
    seq = [p + 2.0 ** (-n) * np.array([1.0, -1.0]) for n in ns]
    cols = {}
    for r in args.resolutions:
        t0 = time.perf_counter()
        cols[r] = continuity_probe(E, 0, seq, p, r)
        print(f"# resolution {r:g}: {time.perf_counter() - t0:.1f} s")
    print(f"{'n':>3} " + " ".join(f"{'H @ ' + format(r, 'g'):>16}" for r in cols))
    for k, n in enumerate(ns):
        print(f"{n:3d} " + " ".join(f"{cols[r][k]:16.10g}" for r in cols))


if __name__ == "__main__":
    main()
