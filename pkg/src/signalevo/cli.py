"""Command-line entry points.

Subcommands: ``evolve``, ``zero-shot``, ``noise``, ``referential``,
``analyze``. Each accepts --config, --out, --seed, --runs and
--parallel; CLI flags override the config file. Non-convergence is a
recorded outcome, never an error; invalid configs exit with status 2.
"""

import argparse
import glob
import sys

from .errors import ConfigError, SignalevoError
from .experiment.campaign import (
    analyze_archives,
    campaign_summary,
    noise_protocol,
    referential_protocol,
    run_campaign,
    zero_shot_protocol,
)
from .experiment.config import ExperimentConfig


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required, help="experiment config file (INI)")
    parser.add_argument("--out", default=None, help="output directory (default: config out_dir)")
    parser.add_argument("--seed", type=int, default=None, help="override base seed")
    parser.add_argument("--runs", type=int, default=None, help="override run count")
    parser.add_argument("--parallel", type=int, default=1, help="worker processes for runs")


def build_parser():
    parser = argparse.ArgumentParser(prog="signalevo", description="Evolve and analyze symbolic signaling systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, descr in (
        ("evolve", "run an evolution campaign and archive every run"),
        ("zero-shot", "zero-shot protocol: evolve on a training subset, score the full vocabulary"),
        ("noise", "noisy-channel protocol: evolve and test under Gaussian noise"),
        ("referential", "referential-game protocol over binary-feature objects"),
    ):
        p = sub.add_parser(name, help=descr)
        _add_common(p)

    p = sub.add_parser("analyze", help="constellations and clustering over run archives")
    _add_common(p, config_required=False)
    p.add_argument("archives", nargs="+", help="run archive directories or globs")
    p.add_argument("--min-samples", type=int, default=4)
    p.add_argument("--xi", type=float, default=0.1)
    return parser


def _load_config(args):
    config = ExperimentConfig.load(args.config)
    updates = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.runs is not None:
        updates["run_count"] = args.runs
    if args.out is not None:
        updates["out_dir"] = args.out
    return config.replace(**updates) if updates else config


def _cmd_evolve(args):
    config = _load_config(args)
    archives = run_campaign(config, parallel=args.parallel)
    summary = campaign_summary(archives)
    print(f"runs: {summary['runs']}  converged: {summary['converged']} ({summary['convergence_rate']:.0%})")
    if summary["converged"]:
        print(f"generations to converge: mean {summary['mean_generations']:.1f}, median {summary['median_generations']:.1f}")
    print(f"archives under: {config.out_dir}/{config.name}")
    return 0


def _cmd_protocol(args, protocol, table):
    config = _load_config(args)
    path = protocol(config, parallel=args.parallel)
    print(f"{table} written to {path}")
    return 0


def _cmd_analyze(args):
    directories = []
    for pattern in args.archives:
        matched = sorted(glob.glob(pattern))
        directories.extend(matched if matched else [pattern])
    out = args.out or "analysis"
    summary = analyze_archives(directories, out, min_samples=args.min_samples, xi=args.xi)
    print(f"analyzed {summary['archives']} archives -> {out}")
    if summary.get("clustered"):
        shares = ", ".join(f"{k}: {v:.1%}" for k, v in summary["shares"].items())
        print(f"clusters: {summary['clusters']} (noise {summary['noise']}); shares: {shares}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "evolve":
            return _cmd_evolve(args)
        if args.command == "zero-shot":
            return _cmd_protocol(args, zero_shot_protocol, "zero_shot.csv")
        if args.command == "noise":
            return _cmd_protocol(args, noise_protocol, "noise.csv")
        if args.command == "referential":
            return _cmd_protocol(args, referential_protocol, "referential.csv")
        if args.command == "analyze":
            return _cmd_analyze(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SignalevoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
