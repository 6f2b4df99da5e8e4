#!/usr/bin/env python3
"""Distance between relativistic and classical trajectories as c grows.

Prints sup_t D(t) for each c with the fitted log-log slopes, and optionally
writes a CSV of D(t) curves.
"""
import argparse
import csv

from rcsflock import harness as H
from rcsflock.diagnostics import deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", default="10,20,40,80,160")
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--csv", default=None, help="write t and D(t) per c here")
    args = ap.parse_args()

    cs = tuple(float(c) for c in args.c.split(","))
    base = H.build_sweep_scenario(cs=cs, t_end=args.t_end, dt=args.dt)
    res = H.run_limit_sweep(base, workers=args.workers)
    for c, s in zip(res.cs, res.sup_D):
        print(f"c = {c:8.1f}   sup D = {s:.3e}")
    print(f"slope of log sup D vs log c:      {res.slope:+.3f}")
    print(f"slope of log sqrt(sup D) vs log c: {res.gap_slope:+.3f}")

    if args.csv:
        ref, runs = res.trajectories[0], res.trajectories[1:]
        with open(args.csv, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t"] + [f"D_c{c:g}" for c in res.cs])
            D = [deviation(r, ref).D for r in runs]
            for k, t in enumerate(ref.times):
                w.writerow([repr(float(t))] + [repr(float(d[k])) for d in D])


if __name__ == "__main__":
    main()
