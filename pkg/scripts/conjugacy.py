"""Fisher 1d: conjugacy defect at T = ln 2 / lambda against the invariance-defect bound.

    python scripts/conjugacy.py [--n 9] [--steps 100] [--levels 3]
"""
import argparse

import numpy as np

from parmfem.diagnostics import conjugacy_defect, theta_grid
from parmfem.experiments import FISHER_1D, run_case


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=9)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args(argv)
    res = run_case(FISHER_1D.at(n=args.n))
    lam = res.manifold.lambdas[0]
    T = np.log(2) / lam
    grid = theta_grid(1, 11, 0.5)
    bound = T * np.exp(lam * T) * res.defect.max
    print(f"lambda={lam:.6g} T={T:.6g} invariance sup={res.defect.max:.3e} bound={bound:.3e}")
    for levels in range(1, args.levels + 1):
        for steps in (args.steps // 2, args.steps, 2 * args.steps):
            rep = conjugacy_defect(res.model, res.space, res.manifold, T, grid, steps, levels)
            print(f"levels={levels} steps={steps:4d} sup={rep.max:.4e} ratio to bound={rep.max / bound:.3f}")


if __name__ == "__main__":
    main()
