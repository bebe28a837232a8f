"""Exact-oracle ratio of scaled block statistics against the predicted w_2.

For [[0.5,0.5,0],[0,0.5,0.5],[0,0,1]] the ratio approaches w_2 = 0.5 with a
c/log N correction. The script prints the ratio along N = 2^k, the fit
w + b/log N, and the same ratio for several initial compositions.

    python3 scripts/w_link_convergence.py [--kmax 23]
"""
import argparse

import numpy as np

from blockurn import ReplacementSpec, analyze, expectation_path, pow2_schedule
from blockurn.urnsim import ExpectationPath, oracle_w_ratio

MATRIX = [[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]]


def ratios(initial, ns):
    a = analyze(ReplacementSpec.from_arrays(MATRIX, initial))
    path = expectation_path(a.spec, ns)
    return a.profile.w_constants[1], np.array(
        [oracle_w_ratio(a.profile, ExpectationPath(path.ns[: i + 1], path.values[: i + 1]), 1) for i in range(len(ns))]
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=23)
    args = ap.parse_args()
    ns = pow2_schedule(10, args.kmax)

    w, r = ratios(None, ns)
    print(f"w_2 = {w}")
    print(f"{'N':>10} {'ratio':>8} {'rel err':>8}")
    for n, x in zip(ns, r):
        print(f"{n:>10} {x:8.4f} {x / w - 1:8.2%}")
    tail = np.array(ns) >= 2**15
    X = np.column_stack([np.ones(tail.sum()), 1 / np.log(np.array(ns)[tail])])
    w_hat, b = np.linalg.lstsq(X, r[tail], rcond=None)[0]
    print(f"fit ratio = w + b/log N over N >= 2^15: w = {w_hat:.4f}, b = {b:.3f}")

    print("\nratio at the largest N by initial composition:")
    for c0 in ([1 / 3, 1 / 3, 1 / 3], [0.6, 0.2, 0.2], [0.45, 0.3, 0.25], [0.2, 0.6, 0.2]):
        _, r = ratios(c0, ns[-1:])
        print(f"  C0={c0!s:<40} ratio={r[-1]:.4f} ({r[-1] / w - 1:+.1%})")


if __name__ == "__main__":
    main()
