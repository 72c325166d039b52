"""Numeric solve vs asymptotic formulas on a disk or ellipse, with two-grid extrapolation.

Usage: python scripts/cross_regime_study.py --curve ellipse --a 1.5 --b 1 --k 12 16 --theta 0.5 --L 3
"""

import argparse
import json

import numpy as np

from dsscatter.asymptotics import leading_exact, reflection_asymptotic, reflection_full
from dsscatter.dirac_solver import DiracProblem, solve_cgo
from dsscatter.geometry import ConvexCurve
from dsscatter.reflection import reflection_numeric


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--curve", choices=["disk", "ellipse"], default="disk")
    ap.add_argument("--a", type=float, default=1.5)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--k", type=float, nargs="+", default=[8.0, 16.0])
    ap.add_argument("--theta", type=float, default=0.0)
    ap.add_argument("--L", type=float, default=None)
    ap.add_argument("--n", type=int, nargs=2, default=[1024, 2048])
    args = ap.parse_args()
    curve = ConvexCurve.disk() if args.curve == "disk" else ConvexCurve.ellipse(args.a, args.b)
    L = args.L or 2.0 * curve.circumradius
    for m in args.k:
        k = m * np.exp(1j * args.theta)
        rs = []
        for n in args.n:
            p = DiracProblem(curve, k, 1, n, L)
            rs.append(reflection_numeric(p, solve_cgo(p, tol=1e-12)).R)
        rn = rs[1] + (rs[1] - rs[0]) / 3
        row = {
            "abs_k": m,
            "theta": args.theta,
            "R_numeric_extrapolated": [rn.real, rn.imag],
            "grid_step_scaled": abs(rs[1] - rs[0]) * m**2.5,
            "gap_leading_only_scaled": abs(rn - np.conj(leading_exact(curve, k))) * m**2.5,
            "gap_asymptotic_full_scaled": abs(rn - reflection_full(curve, k).R) * m**2.5,
            "gap_asymptotic_spa_scaled": abs(rn - reflection_asymptotic(curve, k).R) * m**2.5,
        }
        print(json.dumps(row), flush=True)


if __name__ == "__main__":
    main()
