"""Planar saddle example: coefficient norms, decay fit and the sampled unstable curve.

    python scripts/ode_curve.py [--order 20] [--scale 1] [--curve curve.csv]
"""
import argparse

import numpy as np

from parmfem.ode_demo import decay_fit, invariance_residual, ode_manifold, sample_curve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=20)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--curve", help="write theta,a,b samples")
    args = ap.parse_args(argv)
    p = ode_manifold(args.order, args.scale)
    for n in range(args.order + 1):
        print(f"{n:3d} {p[n, 0]: .6e} {p[n, 1]: .6e} {np.linalg.norm(p[n]):.3e}")
    C, r = decay_fit(p)
    print(f"decay fit ||p_n|| ~ {C:.3g} * 10^({r:.4f} n); invariance residual {np.abs(invariance_residual(p)).max():.1e}")
    for s in (1.0, 2.5, 13.0):
        N = 100 if s == 13.0 else 20
        print(f"s={s:5.1f} N={N:3d} ||p_N||={np.linalg.norm(ode_manifold(N, s)[N]):.3e}")
    if args.curve:
        np.savetxt(args.curve, sample_curve(p), delimiter=",", header="theta,a,b", comments="", fmt="%.17g")


if __name__ == "__main__":
    main()
