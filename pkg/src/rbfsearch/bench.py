"""Benchmark harness: random-search baseline, simulated evaluation latency,
and suite runs that compare algorithms and worker counts.

The harness mirrors the usual reporting for expensive-black-box methods:
per-tolerance solved counts against certified optima, pairwise
count-better tables and a Friedman test over seeds, and wall-clock speedup
at several worker counts.  Mean times are taken over the runs solved at
every worker count, so the speedup column is not polluted by runs that
timed out at one width but not another.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (BoxDomain, EvalKind, EvalRecord, ObjectiveSense, RngStream,
                   snap_integers)
from .engine import (MAX_CONSECUTIVE_FAILURES, Budget, EngineError,
                     OptimizationResult, OptimizerConfig, StopReason,
                     best_so_far_trace, penalty_value)
from .hpo import HpoSpace, to_domain
from .scheduler import run_parallel
from .stats import count_better_matrix, friedman_from_values
from .testfuncs import TestFunction, default_suite, get_function

SOLVED_ABS_FLOOR = 1e-8  # below this |optimum|, gaps are absolute


class BenchError(ValueError):
    """Raised for malformed benchmark specifications."""


def random_search(objective: Callable, domain_or_space,
                  sense: ObjectiveSense = ObjectiveSense.MINIMIZE,
                  budget: Budget = Budget(max_evaluations=100),
                  rng: RngStream | int = 0) -> OptimizationResult:
    """Baseline: budget-many independent uniform draws in the box.

    Draws are uniform in the encoded coordinates, so log-scale dimensions
    are sampled uniformly in the exponent; integer dimensions are snapped.
    Failed evaluations follow the engine's penalty policy.
    """
    d = to_domain(domain_or_space) if isinstance(domain_or_space, HpoSpace) \
        else domain_or_space
    root = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    gen = root.child("random_search").generator()

    t0 = time.monotonic()
    records: list[EvalRecord] = []
    wall_ms: list[float] = []
    internal_values: list[float] = []
    best_user: Optional[float] = None
    consecutive_failures = 0

    def stopped() -> Optional[StopReason]:
        if budget.target_value is not None and best_user is not None \
                and sense.better(best_user, budget.target_value):
            return StopReason.TARGET_REACHED
        if budget.max_evaluations is not None \
                and len(records) >= budget.max_evaluations:
            return StopReason.EVALS_EXHAUSTED
        if budget.max_wallclock is not None \
                and time.monotonic() - t0 >= budget.max_wallclock:
            return StopReason.TIME_EXHAUSTED
        return None

    reason = None
    while True:
        reason = stopped()
        if reason is not None:
            break
        point = snap_integers(gen.uniform(d.lower, d.upper), d)
        failed = False
        try:
            uval = float(objective(point))
            if not np.isfinite(uval):
                raise ValueError(f"objective returned {uval}")
            ival = sense.to_internal(uval)
            consecutive_failures = 0
        except Exception:
            failed = True
            consecutive_failures += 1
            ival = penalty_value(np.asarray(internal_values))
        records.append(EvalRecord(point=tuple(point.tolist()), value=ival,
                                  kind=EvalKind.SEARCH,
                                  sequence_id=len(records), failed=failed))
        wall_ms.append((time.monotonic() - t0) * 1000.0)
        internal_values.append(ival)
        if not failed:
            u = sense.to_user(ival)
            if best_user is None or sense.better(u, best_user):
                best_user = u
        if consecutive_failures >= MAX_CONSECUTIVE_FAILURES:
            raise EngineError(
                f"{consecutive_failures} consecutive evaluation failures; aborting")

    if not records:
        raise EngineError("stopping criterion fired before any evaluation ran")
    best_idx = int(np.argmin([r.value for r in records]))
    best = records[best_idx]
    return OptimizationResult(
        best_point=np.asarray(best.point, dtype=float),
        best_value=sense.to_user(best.value),
        evaluations=records,
        stopped_because=reason,
        sense=sense,
        wall_ms=wall_ms,
        worker_ids=[0] * len(records),
        wall_time_s=time.monotonic() - t0,
    )


def with_simulated_latency(func: Callable, latency_ms: tuple,
                           rng: RngStream | int = 0) -> Callable:
    """Wrap an objective so each call sleeps for a uniform random duration
    first.  Draws are serialized with a lock since the scheduler calls the
    objective from several worker threads."""
    a, b = float(latency_ms[0]), float(latency_ms[1])
    if a < 0 or b < a:
        raise BenchError(f"latency range must satisfy 0 <= a <= b, got ({a}, {b})")
    gen = (rng if isinstance(rng, RngStream) else RngStream(int(rng), "latency")).generator()
    lock = threading.Lock()

    def wrapped(x):
        with lock:
            delay = gen.uniform(a, b)
        if delay > 0:
            time.sleep(delay / 1000.0)
        return func(x)

    return wrapped


@dataclass(frozen=True)
class BenchSpec:
    """What to run: suite, budget rule, latency model, seeds, worker counts."""

    suite: tuple = ()
    latency_ms: tuple = (50.0, 100.0)
    seeds: int = 5
    worker_counts: tuple = (1,)
    budget_multiplier: int = 60          # evaluations = multiplier * (n + 1)
    budget_evaluations: Optional[int] = None   # fixed override
    store_traces: bool = True

    def __post_init__(self):
        suite = tuple(get_function(f) if isinstance(f, str) else f
                      for f in self.suite)
        object.__setattr__(self, "suite", suite)
        object.__setattr__(self, "worker_counts",
                           tuple(int(w) for w in self.worker_counts))
        object.__setattr__(self, "latency_ms",
                           (float(self.latency_ms[0]), float(self.latency_ms[1])))
        if not suite:
            object.__setattr__(self, "suite", tuple(default_suite()))
        if self.seeds < 1:
            raise BenchError("seeds must be >= 1")
        if any(w < 1 for w in self.worker_counts):
            raise BenchError("worker counts must be >= 1")
        if not self.latency_ms[0] <= self.latency_ms[1]:
            raise BenchError("latency range must satisfy a <= b")

    def budget_for(self, f: TestFunction) -> int:
        if self.budget_evaluations is not None:
            return int(self.budget_evaluations)
        return self.budget_multiplier * (f.n + 1)


def is_solved(value: float, optimum: float, tol: float) -> bool:
    """Relative-gap solve rule with an absolute fallback near zero optima:
    gap / |optimum| <= tol, or |gap| <= tol when |optimum| < 1e-8 (so the 1%
    tolerance becomes an absolute 1e-2)."""
    gap = abs(value - optimum)
    if abs(optimum) < SOLVED_ABS_FLOOR:
        return gap <= tol
    return gap / abs(optimum) <= tol


@dataclass
class AlgorithmRuns:
    """All runs of one algorithm label on one function."""

    label: str
    final_values: list = field(default_factory=list)   # per seed
    wall_s: list = field(default_factory=list)
    solved_1pct: list = field(default_factory=list)    # bool per seed
    solved_01pct: list = field(default_factory=list)
    traces: list = field(default_factory=list)


@dataclass
class ComparisonReport:
    spec_summary: dict
    functions: list                     # per-function result blocks
    speedup: Optional[dict]             # surrogate wall-clock scaling
    totals: dict

    def to_dict(self) -> dict:
        return {
            "spec": self.spec_summary,
            "functions": self.functions,
            "speedup": self.speedup,
            "totals": self.totals,
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _surrogate_label(workers: int) -> str:
    return "surrogate" if workers == 1 else f"surrogate[w={workers}]"


def run_bench(spec: BenchSpec, algorithms: Sequence[str] = ("surrogate",),
              out_path=None, config: Optional[OptimizerConfig] = None,
              base_seed: int = 0) -> ComparisonReport:
    """Run the suite and assemble the comparison report.

    ``algorithms`` may contain "surrogate" (run once per worker count in the
    spec) and "random_search" (always serial).  Each (function, seed) pair
    shares its master seed across algorithms and worker counts so the
    comparisons are paired.
    """
    for a in algorithms:
        if a not in ("surrogate", "random_search"):
            raise BenchError(f"unknown algorithm {a!r}")
    if not algorithms:
        raise BenchError("need at least one algorithm")

    labels: list[str] = []
    if "surrogate" in algorithms:
        labels.extend(_surrogate_label(w) for w in spec.worker_counts)
    if "random_search" in algorithms:
        labels.append("random_search")

    function_blocks = []
    per_label_solved1: dict[str, int] = {lab: 0 for lab in labels}
    per_label_solved01: dict[str, int] = {lab: 0 for lab in labels}
    surrogate_runs: dict[int, list[dict]] = {w: [] for w in spec.worker_counts}

    for f in spec.suite:
        budget = Budget(max_evaluations=spec.budget_for(f))
        runs = {lab: AlgorithmRuns(label=lab) for lab in labels}
        for seed in range(spec.seeds):
            master = RngStream(base_seed + seed, f"bench:{f.name}")
            for lab in labels:
                latency_rng = master.child(f"latency:{lab}")
                objective = with_simulated_latency(f, spec.latency_ms, latency_rng) \
                    if spec.latency_ms[1] > 0 else f
                if lab == "random_search":
                    result = random_search(objective, f.domain, budget=budget,
                                           rng=master)
                else:
                    w = 1 if lab == "surrogate" else int(lab.split("=")[1][:-1])
                    result = run_parallel(objective, f.domain, budget=budget,
                                          config=config, workers=w, rng=master)
                s1 = is_solved(result.best_value, f.optimum, 0.01)
                s01 = is_solved(result.best_value, f.optimum, 0.001)
                ar = runs[lab]
                ar.final_values.append(result.best_value)
                ar.wall_s.append(result.wall_time_s)
                ar.solved_1pct.append(s1)
                ar.solved_01pct.append(s01)
                if spec.store_traces:
                    ar.traces.append(best_so_far_trace(result).tolist())
                per_label_solved1[lab] += int(s1)
                per_label_solved01[lab] += int(s01)
                if lab != "random_search":
                    surrogate_runs[w].append(
                        {"function": f.name, "seed": seed, "solved": s1,
                         "wall_s": result.wall_time_s})

        block = {
            "function": f.name,
            "n": f.n,
            "optimum": f.optimum,
            "budget": spec.budget_for(f),
            "algorithms": {
                lab: {
                    "final_values": runs[lab].final_values,
                    "solved_1pct": int(sum(runs[lab].solved_1pct)),
                    "solved_01pct": int(sum(runs[lab].solved_01pct)),
                    "mean_wall_s": float(np.mean(runs[lab].wall_s)),
                    "traces": runs[lab].traces,
                }
                for lab in labels
            },
        }
        if len(labels) >= 2 and spec.seeds >= 2:
            table = np.column_stack([runs[lab].final_values for lab in labels])
            stat, sig = friedman_from_values(table)
            block["count_better"] = {
                "labels": labels,
                "matrix": count_better_matrix(table).tolist(),
            }
            block["friedman"] = {"statistic": stat, "significant_95": sig}
        function_blocks.append(block)

    speedup = None
    if "surrogate" in algorithms and len(spec.worker_counts) >= 1:
        # runs solved at every worker count form the timing set
        keys = {(r["function"], r["seed"])
                for r in surrogate_runs[spec.worker_counts[0]]}
        solved_by_all = {
            key for key in keys
            if all(any(r["function"] == key[0] and r["seed"] == key[1] and r["solved"]
                       for r in surrogate_runs[w]) for w in spec.worker_counts)
        }
        mean_wall = {}
        for w in spec.worker_counts:
            times = [r["wall_s"] for r in surrogate_runs[w]
                     if (r["function"], r["seed"]) in solved_by_all]
            mean_wall[w] = float(np.mean(times)) if times else float("nan")
        base = mean_wall.get(1, mean_wall[spec.worker_counts[0]])
        speedup = {
            "worker_counts": list(spec.worker_counts),
            "common_solved_runs": len(solved_by_all),
            "mean_wall_s": {str(w): mean_wall[w] for w in spec.worker_counts},
            "solved_1pct": {str(w): sum(r["solved"] for r in surrogate_runs[w])
                            for w in spec.worker_counts},
            "speedup": {str(w): (base / mean_wall[w] if mean_wall[w] > 0 else
                                 float("nan"))
                        for w in spec.worker_counts},
        }

    total_runs = len(spec.suite) * spec.seeds
    report = ComparisonReport(
        spec_summary={
            "suite": [f.name for f in spec.suite],
            "latency_ms": list(spec.latency_ms),
            "seeds": spec.seeds,
            "worker_counts": list(spec.worker_counts),
            "budget_rule": (f"{spec.budget_multiplier}*(n+1)"
                            if spec.budget_evaluations is None
                            else str(spec.budget_evaluations)),
            "algorithms": list(labels),
        },
        functions=function_blocks,
        speedup=speedup,
        totals={
            "runs_per_algorithm": total_runs,
            "solved_1pct": per_label_solved1,
            "solved_01pct": per_label_solved01,
            "solved_1pct_fraction": {lab: per_label_solved1[lab] / total_runs
                                     for lab in labels},
            "solved_01pct_fraction": {lab: per_label_solved01[lab] / total_runs
                                      for lab in labels},
        },
    )
    if out_path is not None:
        report.write(out_path)
    return report
