"""Grid convergence of R(k) for the unit disk against the asymptotic value.

Usage: python scripts/convergence_study.py [--k 8 16 32] [--L 2.0] [--nmax 2048] [--sampling coverage]
"""

import argparse
import json
import time

import numpy as np

from dsscatter.asymptotics import reflection_asymptotic
from dsscatter.dirac_solver import DiracProblem, NyquistError, solve_cgo
from dsscatter.geometry import ConvexCurve
from dsscatter.reflection import reflection_numeric


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=float, nargs="+", default=[8.0, 16.0, 32.0])
    ap.add_argument("--L", type=float, default=2.0)
    ap.add_argument("--nmax", type=int, default=2048)
    ap.add_argument("--sampling", default="coverage", choices=["coverage", "centre"])
    ap.add_argument("--born", default="boundary", choices=["boundary", "grid"])
    args = ap.parse_args()
    disk = ConvexCurve.disk()
    out = []
    for k in args.k:
        ra = reflection_asymptotic(disk, k).R
        prev = None
        n = 128
        while n <= args.nmax:
            try:
                p = DiracProblem(disk, k, 1, n, args.L, indicator_sampling=args.sampling)
            except NyquistError:
                n *= 2
                continue
            t0 = time.perf_counter()
            rn = reflection_numeric(p, solve_cgo(p, tol=1e-12), born=args.born).R
            dt = time.perf_counter() - t0
            row = {
                "k": k, "n": n, "R": rn.real, "R_minus_asym": (rn - ra).real,
                "scaled": abs(rn - ra) * k**2.5,
                "step": None if prev is None else abs(rn - prev), "seconds": round(dt, 2),
            }
            if prev is not None:
                row["richardson"] = (rn + (rn - prev) / 3).real
                row["richardson_minus_asym"] = row["richardson"] - ra.real
            print(json.dumps(row), flush=True)
            out.append(row)
            prev = rn
            n *= 2
    return out


if __name__ == "__main__":
    main()
