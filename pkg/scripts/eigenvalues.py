"""Equilibria and leading eigenvalues of the linearization for the named cases.

    python scripts/eigenvalues.py [--n 9] [--k 4]
"""
import argparse

import numpy as np

from parmfem.equilibrium import unstable_eigendata
from parmfem.experiments import FISHER_1D, FISHER_2D, FISHER_RICKER_1D, FISHER_RICKER_2D, FKS_1D, equilibrium_case


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=9, help="P1 resolution (FKS uses its own n)")
    ap.add_argument("--k", type=int, default=4)
    args = ap.parse_args(argv)
    for name, cfg in (("fisher a=2.7", FISHER_1D), ("fisher a=9", FISHER_2D),
                      ("fisher-ricker a=-4.7", FISHER_RICKER_1D), ("fisher-ricker a=-4.41", FISHER_RICKER_2D)):
        res = equilibrium_case(cfg.at(n=args.n, eig_window=args.k))
        u = res.space.values(res.c0)
        print(f"{name:22s} ne={res.ne} morse={res.morse} u in [{u.min():.4f}, {u.max():.4f}] "
              f"lambda={np.round(res.eigenvalues, 4).tolist()}")
    res = equilibrium_case(FKS_1D.at(eig_window=args.k))
    print(f"{'fks':22s} ne={res.ne} morse={res.morse} lambda={np.round(res.eigenvalues, 4).tolist()}")
    # linearization at u = 0 for Fisher-Ricker a = -4.7
    fr = equilibrium_case(FISHER_RICKER_1D.at(n=args.n))
    zero = unstable_eigendata(fr.model, fr.space, np.zeros(fr.space.nb), k=args.k)
    print(f"{'fisher-ricker a=-4.7 u=0':22s} lambda={np.round([p.value for p in zero], 4).tolist()}")


if __name__ == "__main__":
    main()
