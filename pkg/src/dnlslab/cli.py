"""Command-line entry point.

Subcommands map one-to-one onto experiment kinds; flags override keys from
an optional config file.  Exit code 0 means every enabled check passed.
"""

from __future__ import annotations

import argparse
import sys

from .harness import ExperimentConfig, parse_config_text, run_experiment

_SUBCOMMANDS = {
    "simulate": "simulate",
    "decay-scan": "decay_scan",
    "packet-test": "packet_test",
    "soliton-test": "soliton_test",
    "linear-baseline": "linear_baseline",
}


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="config file (flat key = value text)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--epsilon", type=float, help="data smallness parameter")
    sub.add_argument("--theta", type=float, help="soliton angle in (0, pi/2)")
    sub.add_argument("--t-end", dest="t_end", type=float, help="final time")
    sub.add_argument("--n", dest="n_points", type=int, help="grid points (power of two)")
    sub.add_argument("--seed", type=int, help="seed recorded in the manifest")
    sub.add_argument("--half-width", dest="half_width", type=float, help="domain half width")
    sub.add_argument("--dt", type=float, help="time step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnlslab",
        description="Numerical experiments on the derivative NLS flow",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sub = subs.add_parser(name)
        _add_common_flags(sub)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config_text(fh.read())
        fields = cfg.to_dict()
    else:
        fields = ExperimentConfig().to_dict()
    fields["kind"] = _SUBCOMMANDS[args.command]
    overrides = {
        "output_dir": args.out,
        "epsilon": args.epsilon,
        "theta": args.theta,
        "t_end": args.t_end,
        "n_points": args.n_points,
        "seed": args.seed,
        "half_width": args.half_width,
        "dt": args.dt,
    }
    for key, value in overrides.items():
        if value is not None:
            fields[key] = value
    fields["epsilon_ladder"] = tuple(fields.get("epsilon_ladder", ()))
    return ExperimentConfig(**fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    manifest = run_experiment(cfg)
    checks = manifest["checks"]
    for name in sorted(checks):
        state = "PASS" if checks[name]["passed"] else "FAIL"
        print(f"[{state}] {name}: value={checks[name]['value']}")
    if manifest["error"]:
        print(f"error: {manifest['error']}", file=sys.stderr)
        return 1
    return 0 if all(c["passed"] for c in checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
