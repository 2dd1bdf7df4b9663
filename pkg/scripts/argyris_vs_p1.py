"""Fisher 1d manifold defect in the P1 and Argyris spaces on the same L-shaped mesh.

    python scripts/argyris_vs_p1.py [--n 8]
"""
import argparse

from parmfem.experiments import FISHER_1D, run_case, summary


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args(argv)
    p1 = run_case(FISHER_1D.at(n=args.n))
    arg = run_case(FISHER_1D.at(n=args.n, space="Argyris"))
    print("P1      ", summary(p1))
    print("Argyris ", summary(arg))
    print(f"ratio P1/Argyris = {p1.defect.average / arg.defect.average:.3e}")


if __name__ == "__main__":
    main()
