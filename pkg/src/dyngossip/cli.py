"""Command-line entry point: ``dyngossip run|sweep|lowerbound|validate|gen-trace``."""
from __future__ import annotations

import argparse
import sys

from . import harness
from .errors import ConfigurationError
from .graph import FAMILIES, SHAPES, GeneratorSpec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(harness.EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override its keys")
    p.add_argument("--protocol", choices=sorted(harness.PROTOCOLS))
    p.add_argument("--adversary", help="oblivious:<trace-file|generator-spec> | freeedge | idlecut:<sigma>")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--s", type=int, help="source count for the default uniform placement")
    p.add_argument("--placement", help="single:<node> | uniform:<s> | file:<path>")
    p.add_argument("--sigma", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alphas", help="comma-separated alpha values for residual columns")
    p.add_argument("--c-f", type=float)
    p.add_argument("--c-gamma", type=float)
    p.add_argument("--c-ell", type=float)
    p.add_argument("--f", type=int, help="override the center target")
    p.add_argument("--gamma", type=int, help="override the degree threshold")
    p.add_argument("--ell", type=int, help="override the phase-1 length")
    p.add_argument("--s-threshold", type=float, help="override the delegation threshold")
    p.add_argument("--walk-rule", choices=("prose", "pseudocode"))
    p.add_argument("-o", "--output", help="CSV file to append to (default: stdout)")


_RUN_KEYS = (
    "protocol", "adversary", "n", "k", "s", "placement", "sigma", "horizon", "seed", "alphas",
    "c_f", "c_gamma", "c_ell", "f", "gamma", "ell", "s_threshold", "walk_rule", "output",
)


def _overrides(args, keys=_RUN_KEYS) -> dict:
    return {key: getattr(args, key, None) for key in keys}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyngossip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="execute one run and append its CSV row")
    _run_flags(p)
    p.add_argument("--events", help="write the per-message event log here")

    p = sub.add_parser("sweep", help="run a Cartesian grid over n, k, s and seed")
    _run_flags(p)
    p.add_argument("--ns", help="n axis, e.g. 16,32,64")
    p.add_argument("--ks", help="k axis; values may be multiples of n such as n,4n")
    p.add_argument("--ss", help="s axis; values may be multiples of n")
    p.add_argument("--seeds", help="seed axis, e.g. 1..10")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output order is fixed)")

    p = sub.add_parser("lowerbound", help="free-graph statistics of the local-broadcast construction")
    p.add_argument("--n", required=True, help="comma-separated node counts")
    p.add_argument("--k", type=int, help="token count (default: n)")
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output")

    p = sub.add_parser("validate", help="check a trace file for connectivity and sigma-stability")
    p.add_argument("trace")
    p.add_argument("--sigma", type=int, default=1)

    p = sub.add_parser("gen-trace", help="generate a trace file")
    p.add_argument("--family", choices=[f for f in FAMILIES if f != "trace-file"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--sigma", type=int, default=1)
    p.add_argument("--churn", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--shape", choices=SHAPES, default="random")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = harness.load_config(args.config, {**_overrides(args), "events": args.events})
            return harness.run_command(cfg)
        if args.command == "sweep":
            axes = {}
            for name, flag in (("n", args.ns), ("k", args.ks), ("s", args.ss), ("seed", args.seeds)):
                if flag is not None:
                    axes[name] = harness.parse_axis(flag)
            if not axes:
                raise ConfigurationError("sweep needs at least one of --ns, --ks, --ss, --seeds")
            # swept keys only need a placeholder until the grid is expanded
            values = _overrides(args)
            for name in axes:
                if values[name] is None:
                    values[name] = "1"
            cfg = harness.load_config(args.config, values)
            return harness.sweep_command(cfg, axes, jobs=args.jobs)
        if args.command == "lowerbound":
            ns = [int(x) for x in harness.parse_axis(args.n)]
            if args.trials < 1:
                raise ConfigurationError("trials must be >= 1")
            return harness.lowerbound_command(ns, args.k, args.p, args.c, args.trials, args.seed, args.output)
        if args.command == "validate":
            return harness.validate_command(args.trace, args.sigma)
        if args.command == "gen-trace":
            spec = GeneratorSpec(
                args.family, args.n, sigma=args.sigma, churn=args.churn, density=args.density,
                seed=args.seed, shape=args.shape,
            )
            return harness.gen_trace_command(spec, args.horizon, args.output)
    except (ConfigurationError, ValueError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return harness.EXIT_USAGE
    return harness.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
