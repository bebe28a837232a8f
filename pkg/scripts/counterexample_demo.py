"""Analyze the coupling counterexample and show where the limit theory stops.

    python3 scripts/counterexample_demo.py [--steps N] [--reps R]
"""
import argparse
import json

import numpy as np

from blockurn import ReplacementSpec, analyze, run_replications
from blockurn.report import build_report

MATRIX = [[0.5, 0, 0.5], [0, 0.5, 0.5], [0, 0, 1]]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=10**6)
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()

    a = analyze(ReplacementSpec.from_arrays(MATRIX))
    rep = build_report(a).to_dict()
    print(json.dumps({k: rep[k] for k in ("assumption_a", "rates", "warnings")}, indent=2))

    traces = run_replications(a.spec, args.steps, [args.steps], seed=0, reps=args.reps)
    fin = np.stack([t.final for t in traces]) / (args.steps + 1)
    print(f"median C_N/(N+1) at N={args.steps}: {np.median(fin, axis=0).round(5).tolist()}")
    v = np.stack([t.final[:2] for t in traces]) / args.steps**0.5
    print("C_N/N^0.5 for the two half blocks (first 5 reps):")
    print(v[:5].round(3))


if __name__ == "__main__":
    main()
