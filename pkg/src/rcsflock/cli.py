"""Command line entry point: ``rcsflock {simulate,check,sweep-c,scenario}``."""
import argparse
import json
import os
import sys

from .diagnostics import admissibility_report, to_json
from .errors import RCSError
from .harness import default_scenario, dump_config, load_config, run_limit_sweep, run_scenario


def _cmd_simulate(args):
    spec = load_config(args.config)
    art = run_scenario(spec, args.out)
    print(json.dumps(art.summary["termination"]))
    return 0


def _cmd_check(args):
    spec = load_config(args.config)
    print(to_json(admissibility_report(spec.state, spec.params, spec.geometry)))
    return 0


def _cmd_sweep(args):
    spec = load_config(args.config)
    cs = [float(c) for c in args.c.split(",")] if args.c else None
    res = run_limit_sweep(spec, cs, T=args.t_end, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    out = {"cs": res.cs, "sup_D": res.sup_D, "slope": res.slope, "gap_slope": res.gap_slope}
    with open(os.path.join(args.out, "sweep.json"), "w") as f:
        json.dump(out, f, indent=2)
    print(json.dumps(out))
    return 0


def _cmd_scenario(args):
    spec = default_scenario(args.name, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    dump_config(spec, os.path.join(args.out, "config.yaml"))
    art = run_scenario(spec, args.out)
    print(json.dumps(art.summary["termination"]))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="rcsflock", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check", help="print the admissibility report of a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("sweep-c", help="nonrelativistic limit sweep over c")
    p.add_argument("--config", required=True)
    p.add_argument("--c", default=None, help="comma separated speeds of light, e.g. 10,20,40,80")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scenario", help="run a built-in scenario")
    p.add_argument("name", choices=["pattern", "collision", "flocking", "sphere"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_scenario)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RCSError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
