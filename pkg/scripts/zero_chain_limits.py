"""Deterministic limits of a chain of lone colors.

Colors 1..D-1 each feed the next; color D absorbs. The j-th zero cluster
grows like c log^(j-1) N. The script compares the exact expectation with the
recursion constant c/(j-1)! and with the alternative c/j!.

    python3 scripts/zero_chain_limits.py [--colors 5] [--kmax 23]
"""
import argparse
import math

import numpy as np

from blockurn import ReplacementSpec, analyze, expectation_path, pow2_schedule


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--colors", type=int, default=5)
    ap.add_argument("--kmax", type=int, default=23)
    args = ap.parse_args()
    D = args.colors
    R = np.zeros((D, D))
    R[np.arange(D - 1), np.arange(1, D)] = 1
    R[-1, -1] = 1
    a = analyze(ReplacementSpec.from_arrays(R))
    ns = pow2_schedule(12, args.kmax)
    E = expectation_path(a.spec, ns).values
    for j in range(D - 1):
        lam, kappa = a.profile.scales[j]
        rec = float(a.profile.descriptors[j].vector[0])
        alt = (1 / D) / math.factorial(j + 1)
        scaled = E[:, j] / np.log(ns) ** kappa
        print(
            f"cluster {j + 1}: scale log^{kappa} N, recursion {rec:.5f}, c/j! {alt:.5f}, "
            f"E/scale at 2^12 {scaled[0]:.5f}, at 2^{args.kmax} {scaled[-1]:.5f}"
        )


if __name__ == "__main__":
    main()
