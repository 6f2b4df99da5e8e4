#!/usr/bin/env python3
"""Pattern formation for several speeds of light.

Runs the star-shaped target pattern at each c and reports the final pattern
error (largest |d_ij - R_ij|), the velocity spread and the energy residual.
"""
import argparse
import math

import numpy as np

from rcsflock import harness as H
from rcsflock import simulate
from rcsflock.diagnostics import energy_identity_residual, flocking_metrics


def pattern_error(state, p):
    d = np.linalg.norm(state.x[:, None] - state.x[None], axis=-1)
    return float(np.max(np.abs(d - p.targets)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--c", default="2,10,inf")
    ap.add_argument("--t-end", type=float, default=30.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pts = H.star_points(args.n)
    for tok in args.c.split(","):
        c = math.inf if tok.strip() == "inf" else float(tok)
        spec = H.build_pattern_scenario(pts, seed=args.seed, c=c, t_end=args.t_end)
        traj = simulate(spec.state, spec.params, spec.stepper)
        fin = flocking_metrics(traj.final_state, spec.params)
        print(f"c = {tok:>5}  pattern error {pattern_error(traj.final_state, spec.params):.2e}"
              f"  velocity spread {fin.max_rel_speed:.2e}"
              f"  energy residual {energy_identity_residual(traj):.1e}")


if __name__ == "__main__":
    main()
