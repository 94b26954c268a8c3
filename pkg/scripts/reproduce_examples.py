"""Print the worked-example numbers: ellipse, Gaussian, Bell bounds, Application 2 bounds."""

import argparse
import math

from udcs.analysis import bound_app2, bound_thm3, expected_length
from udcs.bell import bell_bound
from udcs.densities import builtin_gaussian1d, builtin_shifted_exponential, builtin_uniform_on
from udcs.regions import Ellipsoid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ellipse-k-max", type=int, default=16)
    ap.add_argument("--gaussian-k-max", type=int, default=20)
    a = ap.parse_args()

    ell = builtin_uniform_on(Ellipsoid([[4 / 3, -2 / 3], [-2 / 3, 4 / 3]]))
    r = expected_length(ell, "unbounded", a.ellipse_k_max)
    print(f"ellipse   E[L] in [{r.mean_length_lower:.4f}, {r.mean_length_upper:.4f}]  "
          f"H(W) {r.entropy_HW:.4f}  atoms {r.atom_count}")
    r = expected_length(builtin_gaussian1d(), "unbounded", a.gaussian_k_max)
    print(f"gaussian  E[L] in [{r.mean_length_lower:.4f}, {r.mean_length_upper:.4f}]  "
          f"H(W) {r.entropy_HW:.4f}")
    print(f"bell      bounded bound at log pi {bound_thm3(1, math.log2(math.pi)):.4f}, "
          f"with split bit {bell_bound():.4f}")
    for x in (0.0, 1.0, 3.0):
        print(f"app2      a={x:g}: bound {bound_app2(x):.4f}", end="")
        if x == 3.0:
            r = expected_length(builtin_shifted_exponential(x), "unbounded", 20)
            print(f"  measured {r.mean_length_upper:.4f}", end="")
        print()


if __name__ == "__main__":
    main()
