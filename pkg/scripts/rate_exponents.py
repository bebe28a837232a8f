"""Fit (alpha, beta) from the exact expectation for spec files.

    python3 scripts/rate_exponents.py specs/*.json [--kmin 19 --kmax 23]
"""
import argparse

from blockurn import expectation_path, pow2_schedule
from blockurn.cli import load_spec
from blockurn.report import analyze
from blockurn.urnsim import fit_rate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("specs", nargs="+")
    ap.add_argument("--kmin", type=int, default=19)
    ap.add_argument("--kmax", type=int, default=23)
    args = ap.parse_args()
    ns = pow2_schedule(args.kmin, args.kmax)
    for path in args.specs:
        a = analyze(load_spec(path))
        E = expectation_path(a.spec, ns).values
        print(path)
        for k, pair in enumerate(a.plan.pairs):
            alpha, beta = pair.as_tuple()
            colors = a.plan.source_form.block_colors(k)
            ah, bh = fit_rate(ns, E[:, colors].sum(axis=1), alpha, beta)
            print(f"  block {k + 1} colors {[int(c) + 1 for c in colors]}: "
                  f"alpha {alpha:.4f} fit {ah:.4f} | beta {beta} fit {bh:.3f}")


if __name__ == "__main__":
    main()
