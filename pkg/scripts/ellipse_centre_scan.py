"""How E[L] and H(W) of the uniform ellipse move with its position on the dyadic grid."""

import argparse

import numpy as np

from udcs.analysis import expected_length
from udcs.densities import builtin_uniform_on
from udcs.regions import Ellipsoid

K = [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-max", type=int, default=16)
    ap.add_argument("--steps", type=int, default=8, help="grid steps per unit along each axis")
    a = ap.parse_args()
    print("cx,cy,mean_length_lower,mean_length_upper,entropy_HW")
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 0.5), (5 / 16, 5 / 16), (0.1, 0.2)]
    pts += [(i / a.steps, j / a.steps) for i in range(a.steps) for j in range(a.steps)]
    for cx, cy in dict.fromkeys(pts):
        r = expected_length(builtin_uniform_on(Ellipsoid(K, [cx, cy])), "unbounded", a.k_max)
        print(f"{cx!r},{cy!r},{r.mean_length_lower:.5f},{r.mean_length_upper:.5f},"
              f"{r.entropy_HW:.5f}", flush=True)


if __name__ == "__main__":
    main()
