"""Eigenvalues of the Weyl-quantized harmonic oscillator x^2 + xi^2 against 2k+1."""

import argparse

import numpy as np

from gmla.grid import make_grid
from gmla.operators import weyl_quantize
from gmla.parser import parse_symbol


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, default=16.0)
    ap.add_argument("--sizes", default="64,128,256,512")
    ap.add_argument("--k", type=int, default=12, help="number of eigenvalues to show")
    args = ap.parse_args()

    a = parse_symbol("x^2+xi^2")
    k = np.arange(args.k)
    print(f"{'N':>5} " + " ".join(f"{j:>9d}" for j in k))
    for N in (int(v) for v in args.sizes.split(",")):
        w = np.linalg.eigvalsh(weyl_quantize(a, make_grid(L=args.L, N=N)).matrix)[: args.k]
        rel = np.abs(w - (2 * k + 1)) / (2 * k + 1)
        print(f"{N:5d} " + " ".join(f"{e:9.1e}" for e in rel))


if __name__ == "__main__":
    main()
