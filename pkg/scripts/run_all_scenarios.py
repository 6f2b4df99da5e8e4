#!/usr/bin/env python3
"""Run every built-in scenario and write its outputs under one directory."""
import argparse
import json
import os

from rcsflock import harness as H


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name in ("pattern", "collision", "flocking", "sphere"):
        spec = H.default_scenario(name, seed=args.seed)
        d = os.path.join(args.out, name)
        os.makedirs(d, exist_ok=True)
        H.dump_config(spec, os.path.join(d, "config.yaml"))
        art = H.run_scenario(spec, d)
        print(name, json.dumps(art.summary["termination"]))


if __name__ == "__main__":
    main()
