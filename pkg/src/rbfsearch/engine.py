"""Serial optimization loop: design, evaluate, fit, propose, repeat.

Evaluation failures are absorbed: a failed point is recorded with a penalty
value one range-span above the worst known value so the surrogate steers
away from it, and the run aborts only after 10 failures in a row.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (BoxDomain, EvalKind, EvalRecord, NodeSet, ObjectiveSense,
                   RngStream, scale_to_unit)
from .design import latin_hypercube
from .proposer import (DEFAULT_WEIGHTS, GaConfig, ProposerError, WeightCycle,
                       propose_with_weight)
from .surrogate import DEFAULT_KERNEL, cap_values, fit

MAX_CONSECUTIVE_FAILURES = 10


class EngineError(RuntimeError):
    """Raised on invalid run setup or repeated evaluation failure."""


class StopReason(str, Enum):
    EVALS_EXHAUSTED = "evals_exhausted"
    TIME_EXHAUSTED = "time_exhausted"
    TARGET_REACHED = "target_reached"
    PROPOSER_SATURATED = "proposer_saturated"


@dataclass(frozen=True)
class Budget:
    max_evaluations: Optional[int] = None
    max_wallclock: Optional[float] = None  # seconds
    target_value: Optional[float] = None   # user sense

    def __post_init__(self):
        if self.max_evaluations is None and self.max_wallclock is None \
                and self.target_value is None:
            raise EngineError("budget must set at least one stopping criterion")


@dataclass(frozen=True)
class OptimizerConfig:
    kernel: str = DEFAULT_KERNEL
    weights: Sequence[float] = DEFAULT_WEIGHTS
    ga: Optional[GaConfig] = None
    design_size: Optional[int] = None
    value_cap: Optional[float] = 0.35   # fit-value cap quantile, None = raw values

    def ga_for(self, n: int) -> GaConfig:
        return self.ga if self.ga is not None else GaConfig.for_dimension(n)


@dataclass
class OptimizationResult:
    best_point: np.ndarray        # raw coordinates
    best_value: float             # user sense
    evaluations: list[EvalRecord] = field(default_factory=list)
    stopped_because: StopReason = StopReason.EVALS_EXHAUSTED
    sense: ObjectiveSense = ObjectiveSense.MINIMIZE
    wall_ms: list[float] = field(default_factory=list)    # per record
    worker_ids: list[int] = field(default_factory=list)   # per record
    wall_time_s: float = 0.0
    events: list[dict] = field(default_factory=list)      # scheduler audit log

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluations)


def penalty_value(current_internal: np.ndarray) -> float:
    """Internal-sense value assigned to a failed evaluation: worst known
    value plus the value range (or 1.0 when the range is degenerate)."""
    if current_internal.size == 0:
        return 1.0
    hi = float(np.max(current_internal))
    span = hi - float(np.min(current_internal))
    return hi + (span if span > 0 else 1.0)


def _finalize(records, sense, reason, t0, wall_ms, worker_ids):
    if not records:
        raise EngineError("stopping criterion fired before any evaluation ran")
    best_idx = int(np.argmin([r.value for r in records]))
    best = records[best_idx]
    return OptimizationResult(
        best_point=np.asarray(best.point, dtype=float),
        best_value=sense.to_user(best.value),
        evaluations=list(records),
        stopped_because=reason,
        sense=sense,
        wall_ms=list(wall_ms),
        worker_ids=list(worker_ids),
        wall_time_s=time.monotonic() - t0,
    )


def optimize(objective: Callable, d: BoxDomain, sense: ObjectiveSense = ObjectiveSense.MINIMIZE,
             budget: Budget = Budget(max_evaluations=100),
             config: Optional[OptimizerConfig] = None,
             rng: RngStream | int = 0) -> OptimizationResult:
    """Minimize (or maximize) the objective over the box.

    Phase 1 evaluates an n+1 point Latin hypercube design; phase 2 loops
    fit / propose / evaluate until a stopping criterion fires.  The budget
    is checked before each evaluation is launched.
    """
    cfg = config or OptimizerConfig()
    root = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    ga = cfg.ga_for(d.n)
    k0 = cfg.design_size or d.n + 1
    if budget.max_evaluations is not None and budget.max_evaluations < k0:
        raise EngineError(
            f"max_evaluations={budget.max_evaluations} below initial design size {k0}")

    t0 = time.monotonic()
    nodes = NodeSet(d.n)
    records: list[EvalRecord] = []
    wall_ms: list[float] = []
    worker_ids: list[int] = []
    best_user = None
    consecutive_failures = 0

    def stop_reason() -> Optional[StopReason]:
        if budget.target_value is not None and best_user is not None \
                and sense.better(best_user, budget.target_value):
            return StopReason.TARGET_REACHED
        if budget.max_evaluations is not None and len(records) >= budget.max_evaluations:
            return StopReason.EVALS_EXHAUSTED
        if budget.max_wallclock is not None \
                and time.monotonic() - t0 >= budget.max_wallclock:
            return StopReason.TIME_EXHAUSTED
        return None

    def run_eval(point_raw, kind, weight):
        nonlocal best_user, consecutive_failures
        point_raw = np.asarray(point_raw, dtype=float)
        failed = False
        try:
            uval = float(objective(point_raw))
            if not np.isfinite(uval):
                raise ValueError(f"objective returned {uval}")
            ival = sense.to_internal(uval)
            consecutive_failures = 0
        except Exception:
            failed = True
            consecutive_failures += 1
            ival = penalty_value(nodes.real_values())
        rec = EvalRecord(point=tuple(point_raw.tolist()), value=ival, kind=kind,
                         sequence_id=len(records), weight_used=weight, failed=failed)
        records.append(rec)
        wall_ms.append((time.monotonic() - t0) * 1000.0)
        worker_ids.append(0)
        nodes.add(scale_to_unit(point_raw, d), ival)
        if not failed:
            u = sense.to_user(ival)
            if best_user is None or sense.better(u, best_user):
                best_user = u
        if consecutive_failures >= MAX_CONSECUTIVE_FAILURES:
            raise EngineError(
                f"{consecutive_failures} consecutive evaluation failures; aborting")

    design = latin_hypercube(d, k0, root.child("design"))
    reason = None
    for p in design.points:
        reason = stop_reason()
        if reason is not None:
            break
        run_eval(p, EvalKind.INITIAL_DESIGN, None)

    cycle = WeightCycle(tuple(cfg.weights))
    proposal_idx = 0
    while reason is None:
        reason = stop_reason()
        if reason is not None:
            break
        model = fit(nodes.points(), cap_values(nodes.values(), cfg.value_cap),
                    cfg.kernel)
        w = cycle.next_weight()
        gen = root.child(f"propose:{proposal_idx}").generator()
        proposal_idx += 1
        try:
            prop = propose_with_weight(model, nodes, d, w, ga, gen)
        except ProposerError:
            reason = StopReason.PROPOSER_SATURATED
            break
        run_eval(prop.point, EvalKind.SEARCH, prop.weight_used)

    return _finalize(records, sense, reason, t0, wall_ms, worker_ids)


def best_so_far_trace(result: OptimizationResult) -> np.ndarray:
    """Running best user-sense value after each evaluation, in record order."""
    if not result.evaluations:
        raise EngineError("trace of an empty result")
    user = np.array([result.sense.to_user(r.value) for r in result.evaluations])
    if result.sense is ObjectiveSense.MINIMIZE:
        return np.minimum.accumulate(user)
    return np.maximum.accumulate(user)
