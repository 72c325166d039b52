"""Calibrate the constant in the asymptotic error model C |k|^-3 ln|k|.

The remainder R_numeric - R_asymptotic is measured on the unit disk with
two-grid extrapolation (n and n/2 on L = 2); the reported constant is twice
the largest observed D |k|^3 / ln|k|.

Usage: python scripts/calibrate_error.py [--k 8 12 16 24 32] [--n 2048]
"""

import argparse
import json

import numpy as np

from dsscatter.asymptotics import C_REPORT, reflection_asymptotic
from dsscatter.dirac_solver import DiracProblem, solve_cgo
from dsscatter.geometry import ConvexCurve
from dsscatter.reflection import reflection_numeric


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=float, nargs="+", default=[8.0, 12.0, 16.0, 24.0, 32.0])
    ap.add_argument("--n", type=int, default=2048)
    args = ap.parse_args()
    disk = ConvexCurve.disk()
    consts = []
    for m in args.k:
        rs = []
        for n in (args.n // 2, args.n):
            p = DiracProblem(disk, m, 1, n, 2.0)
            rs.append(reflection_numeric(p, solve_cgo(p, tol=1e-12)).R)
        rn = rs[1] + (rs[1] - rs[0]) / 3
        d = abs(rn - reflection_asymptotic(disk, m).R)
        consts.append(d * m**3 / np.log(m))
        print(json.dumps({"abs_k": m, "remainder": d, "constant": consts[-1]}), flush=True)
    print(json.dumps({"suggested_C_REPORT": 2 * max(consts), "current_C_REPORT": C_REPORT}))


if __name__ == "__main__":
    main()
