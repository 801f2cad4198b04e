"""Command line interface.

Subcommands: ``optimize`` runs one configured optimization, ``bench`` runs
the benchmark suite and writes a comparison report, ``decode`` maps a raw
point to named hyperparameter values.  Exit codes: 0 success, 1
configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .bench import BenchError, BenchSpec, run_bench
from .config import ConfigError, RunConfig, load_config
from .core import DomainError
from .engine import Budget, optimize
from .hpo import SpaceError, decode
from .logs import write_event_log, write_result_log
from .protocol import ExternalObjective
from .scheduler import run_parallel
from .testfuncs import UnknownFunctionError


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; bad flags are config errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbfsearch",
                     description="Surrogate-based optimization of expensive "
                                 "black-box functions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_opt = sub.add_parser("optimize", help="run one configured optimization")
    p_opt.add_argument("--config", required=True, help="JSON run configuration")
    p_opt.add_argument("--workers", type=int, default=None,
                       help="override worker count")
    p_opt.add_argument("--seed", type=int, default=None, help="override master seed")
    p_opt.add_argument("--max-evals", type=int, default=None,
                       help="override evaluation budget")
    p_opt.add_argument("--max-seconds", type=float, default=None,
                       help="override wall-clock budget")
    p_opt.add_argument("--output", default=None,
                       help="write the result log (JSON lines) here")
    p_opt.add_argument("--events", default=None,
                       help="write the scheduler event log here")

    p_bench = sub.add_parser("bench", help="run the benchmark suite")
    p_bench.add_argument("--suite", default="default",
                         help='comma-separated function names, or "default"')
    p_bench.add_argument("--workers", default="1",
                         help="comma-separated worker counts, e.g. 1,2,4,8")
    p_bench.add_argument("--seeds", type=int, default=5, help="seeds per instance")
    p_bench.add_argument("--latency-ms", default="50:100",
                         help="simulated latency range A:B in milliseconds")
    p_bench.add_argument("--algorithms", default="surrogate,random_search",
                         help="comma-separated: surrogate, random_search")
    p_bench.add_argument("--output", default="bench_report.json",
                         help="write the comparison report here")

    p_dec = sub.add_parser("decode", help="decode a raw point to named values")
    p_dec.add_argument("--config", required=True,
                       help="JSON run configuration with a search space")
    p_dec.add_argument("--point", required=True,
                       help="comma-separated raw coordinates")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg.workers = args.workers
    if args.seed is not None:
        cfg.seed = args.seed
    if args.max_evals is not None or args.max_seconds is not None:
        b = cfg.budget
        cfg.budget = Budget(
            max_evaluations=args.max_evals if args.max_evals is not None
            else b.max_evaluations,
            max_wallclock=args.max_seconds if args.max_seconds is not None
            else b.max_wallclock,
            target_value=b.target_value,
        )
    if cfg.budget.max_evaluations is not None \
            and cfg.budget.max_evaluations < cfg.design_size:
        raise ConfigError(
            f"budget max_evaluations={cfg.budget.max_evaluations} is below "
            f"the initial design size {cfg.design_size}")
    return cfg


def _cmd_optimize(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    closer = None
    if cfg.evaluator_kind == "builtin":
        objective = cfg.evaluator
    else:
        objective = ExternalObjective(cfg.evaluator, space=cfg.space,
                                      domain=cfg.domain, timeout=cfg.timeout_s)
        closer = objective
    try:
        if cfg.workers == 1:
            result = optimize(objective, cfg.domain, cfg.sense, cfg.budget,
                              cfg.optimizer, rng=cfg.seed)
        else:
            result = run_parallel(objective, cfg.domain, cfg.sense, cfg.budget,
                                  cfg.optimizer, workers=cfg.workers,
                                  rng=cfg.seed)
    finally:
        if closer is not None:
            closer.close()

    if args.output:
        write_result_log(result, args.output, space=cfg.space)
    if args.events:
        write_event_log(result.events, args.events)

    best_point = [float(v) for v in result.best_point]
    summary = {
        "best_value": result.best_value,
        "best_point": best_point,
        "evaluations": result.n_evaluations,
        "stopped_because": result.stopped_because.value,
        "wall_time_s": round(result.wall_time_s, 3),
    }
    if cfg.space is not None:
        summary["best_params"] = decode(cfg.space, best_point)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_bench(args) -> int:
    if args.suite.strip() == "default":
        suite = ()
    else:
        suite = tuple(s.strip() for s in args.suite.split(",") if s.strip())
    try:
        worker_counts = tuple(int(w) for w in args.workers.split(","))
        a, _, b = args.latency_ms.partition(":")
        latency = (float(a), float(b)) if b else (float(a), float(a))
    except ValueError as exc:
        raise ConfigError(f"bad flag value: {exc}")
    algorithms = tuple(s.strip() for s in args.algorithms.split(",") if s.strip())

    spec = BenchSpec(suite=suite, latency_ms=latency, seeds=args.seeds,
                     worker_counts=worker_counts)
    report = run_bench(spec, algorithms=algorithms, out_path=args.output)

    totals = report.totals
    for lab in report.spec_summary["algorithms"]:
        print(f"{lab}: solved 1% {totals['solved_1pct'][lab]}/"
              f"{totals['runs_per_algorithm']}, "
              f"0.1% {totals['solved_01pct'][lab]}/{totals['runs_per_algorithm']}")
    if report.speedup is not None:
        for w in report.speedup["worker_counts"]:
            s = report.speedup["speedup"][str(w)]
            t = report.speedup["mean_wall_s"][str(w)]
            print(f"workers={w}: mean wall {t:.2f} s, speedup {s:.2f}")
    print(f"report written to {args.output}")
    return 0


def _cmd_decode(args) -> int:
    cfg = load_config(args.config)
    if cfg.space is None:
        raise ConfigError("decode requires a configuration with a search space")
    try:
        point = [float(v) for v in args.point.split(",")]
    except ValueError:
        raise ConfigError(f"--point must be comma-separated numbers, got {args.point!r}")
    values = decode(cfg.space, np.asarray(point))
    print(json.dumps(values, indent=2))
    return 0


_COMMANDS = {"optimize": _cmd_optimize, "bench": _cmd_bench, "decode": _cmd_decode}

_CONFIG_ERRORS = (ConfigError, SpaceError, BenchError, UnknownFunctionError,
                  DomainError)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything past validation is a runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
