"""Command-line interface.

Subcommands mirror the workflow: `dict build` precomputes a steering
dictionary, `sim generate` writes ground-truthed captures, `estimate run`
executes estimators over the scenario grid, and `eval report` additionally
writes the aggregate tables and figures. Exit codes: 0 success, 1
configuration problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .dictionary import save_dictionary
from .errors import ConfigurationError, WaveDoaError
from .harness.config import ExperimentConfig, load_experiment_config
from .harness.figures import render_figures
from .harness.runner import build_dictionary, generate_captures, run_experiment


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    runtime failures, so bad usage becomes a configuration error instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment TOML file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def _add_estimator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--estimator",
        choices=("mle", "srp", "both"),
        default=None,
        help="which estimator(s) to run (default: from config)",
    )
    parser.add_argument(
        "--dump-likelihood",
        action="store_true",
        help="write per-frame likelihood grids as CSV",
    )


def _load(args) -> ExperimentConfig:
    cfg = load_experiment_config(args.config)
    updates: dict = {"output_dir": args.out}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        updates["seed"] = args.seed
    if getattr(args, "estimator", None):
        updates["estimators"] = ("mle", "srp") if args.estimator == "both" else (args.estimator,)
    return dataclasses.replace(cfg, **updates)


def _cmd_dict_build(args) -> int:
    cfg = dataclasses.replace(_load(args), dictionary_path=None)
    dictionary = build_dictionary(cfg)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dictionary.wdoa")
    save_dictionary(dictionary, path)
    print(
        f"wrote {path}: {dictionary.model}, {dictionary.geometry.num_mics} mics, "
        f"{dictionary.num_frequencies} frequencies, {dictionary.grid.num_directions} directions"
    )
    return 0


def _cmd_sim_generate(args) -> int:
    cfg = _load(args)
    paths = generate_captures(cfg, args.out)
    print(f"wrote {len(paths) - 1} captures and ground_truth.jsonl to {args.out}")
    return 0


def _print_stats(report) -> None:
    for est, s in sorted(report.stats.items()):
        if s.count == 0:
            print(f"{est}: no successful runs ({s.excluded} failed)")
            continue
        print(
            f"{est}: n={s.count} excluded={s.excluded} mae={s.mae_deg:.2f} deg "
            f"p50={s.p50_deg:.2f} p90={s.p90_deg:.2f} p95={s.p95_deg:.2f}"
        )


def _cmd_estimate_run(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, dump_likelihood=args.dump_likelihood)
    _print_stats(report)
    print(f"records: {os.path.join(args.out, 'records.csv')}")
    return 0


def _cmd_eval_report(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, dump_likelihood=args.dump_likelihood)
    figures = render_figures(report, args.out)
    _print_stats(report)
    print(f"report tables in {args.out}; figures: {', '.join(sorted(figures.values()))}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="wavedoa", description=__doc__)
    groups = parser.add_subparsers(dest="group", required=True)

    dict_group = groups.add_parser("dict", help="steering dictionary tools")
    dict_sub = dict_group.add_subparsers(dest="command", required=True)
    p = dict_sub.add_parser("build", help="build and save the dictionary")
    _add_common(p)
    p.set_defaults(func=_cmd_dict_build)

    sim_group = groups.add_parser("sim", help="room simulation tools")
    sim_sub = sim_group.add_subparsers(dest="command", required=True)
    p = sim_sub.add_parser("generate", help="write simulated captures + ground truth")
    _add_common(p)
    p.set_defaults(func=_cmd_sim_generate)

    est_group = groups.add_parser("estimate", help="run estimators")
    est_sub = est_group.add_subparsers(dest="command", required=True)
    p = est_sub.add_parser("run", help="run the estimator grid, write records.csv")
    _add_common(p)
    _add_estimator_flags(p)
    p.set_defaults(func=_cmd_estimate_run)

    eval_group = groups.add_parser("eval", help="evaluation reports")
    eval_sub = eval_group.add_subparsers(dest="command", required=True)
    p = eval_sub.add_parser("report", help="run + aggregate tables + figures")
    _add_common(p)
    _add_estimator_flags(p)
    p.set_defaults(func=_cmd_eval_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except WaveDoaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected runtime failure
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
