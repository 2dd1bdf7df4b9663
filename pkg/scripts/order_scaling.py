"""FKS 1d manifold: invariance defect as a function of the truncation order at fixed scaling.

    python scripts/order_scaling.py [--n 4] [--max-order 120]
"""
import argparse

from parmfem.diagnostics import invariance_defect, theta_grid
from parmfem.experiments import FKS_1D, run_case
from parmfem.manifold import compute_manifold, order_norms


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--max-order", type=int, default=120)
    args = ap.parse_args(argv)
    base = run_case(FKS_1D.at(n=args.n))
    P = compute_manifold(base.model, base.space, base.c0, base.eigenpairs[:1], base.scalings, args.max_order)
    norms = order_norms(P, base.space)
    grid = theta_grid(1, 21)
    print(f"lambda={base.eigenvalues[0]:.6g} s={base.scalings[0]:.6g} ne={base.ne}")
    print("N,average_defect,max_defect,coefficient_norm")
    for N in (5, 10, 20, 30, 40, 60, 80, 100, 120):
        if N > args.max_order:
            break
        rep = invariance_defect(base.model, base.space, P.truncate(N), grid)
        print(f"{N},{rep.average:.6e},{rep.max:.6e},{norms[N]:.3e}")


if __name__ == "__main__":
    main()
