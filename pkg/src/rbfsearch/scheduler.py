"""Asynchronous parallel evaluation with a two-priority task queue.

Two task types flow through one queue: type 1 evaluates the objective at an
accepted point, type 2 computes a new search point (surrogate fit plus GA)
against a snapshot of the node set.  Type 1 always outranks type 2; within a
kind the queue is first come, first served.  While an evaluation is in
flight its point is held in the node set as a temporary node valued by the
surrogate prediction clipped to the range of real values, which keeps
concurrent proposals away from it and guarantees all evaluated points are
distinct.

A single coordinator (the thread calling :func:`run_parallel`) owns all
state; workers only execute payloads handed to them and report back over a
queue.  Every state transition is appended to an event log so the run can
be audited after the fact.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (BoxDomain, ContractError, EvalKind, EvalRecord, NodeSet,
                   ObjectiveSense, RngStream, scale_to_unit)
from .design import latin_hypercube
from .engine import (MAX_CONSECUTIVE_FAILURES, Budget, EngineError,
                     OptimizationResult, OptimizerConfig, StopReason,
                     penalty_value)
from .proposer import (Proposal, ProposerError, WeightCycle, _min_dist_scaled,
                       min_separation, propose_with_weight)
from .surrogate import RbfModel, cap_values, fit, predict

EVALUATE = 1   # type-1 task
PROPOSE = 2    # type-2 task

MAX_PROPOSAL_FAILURES = 10


class SchedulerError(RuntimeError):
    pass


@dataclass
class Task:
    task_id: int
    kind: int                       # EVALUATE or PROPOSE
    enqueued_at: int                # event sequence number at creation
    point: Optional[np.ndarray] = None      # evaluate payload
    eval_kind: EvalKind = EvalKind.SEARCH
    weight: Optional[float] = None          # weight ticket
    ticket: Optional[int] = None            # proposal substream index
    retried: bool = False


@dataclass
class TempNode:
    point: np.ndarray       # raw coordinates
    clipped_value: float    # internal sense
    linked_task: int


class SchedulerState:
    """Queue, node set and bookkeeping; mutated only by the coordinator."""

    def __init__(self, d: BoxDomain, sense: ObjectiveSense, workers: int,
                 config: OptimizerConfig):
        self.domain = d
        self.sense = sense
        self.workers = workers
        self.config = config
        self.nodes = NodeSet(d.n)
        self.queue1: list[Task] = []
        self.queue2: list[Task] = []
        self.in_flight: dict[int, Task] = {}
        self.temp_nodes: dict[int, TempNode] = {}
        self.records: list[EvalRecord] = []
        self.wall_ms: list[float] = []
        self.worker_ids: list[int] = []
        self.events: list[dict] = []
        self.cycle = WeightCycle(tuple(config.weights))
        self.best_user: Optional[float] = None
        self.consecutive_failures = 0
        self.proposal_failures = 0
        self.next_task_id = 0
        self.next_ticket = 0
        self.seq = 0
        self.t0 = time.monotonic()

    # -- event log -----------------------------------------------------------

    def log(self, event: str, **fields):
        entry = {"seq": self.seq, "event": event,
                 "t_wall_ms": (time.monotonic() - self.t0) * 1000.0}
        entry.update(fields)
        self.seq += 1
        self.events.append(entry)

    # -- queue -----------------------------------------------------------------

    def enqueue(self, task: Task):
        (self.queue1 if task.kind == EVALUATE else self.queue2).append(task)
        self.log("enqueue", task=task.task_id, kind=task.kind,
                 point=None if task.point is None else task.point.tolist(),
                 weight=task.weight)

    def dequeue(self, worker: Optional[int] = None) -> Task:
        """Oldest pending type-1 task, else oldest type-2; FIFO within kind."""
        if not self.queue1 and not self.queue2:
            raise ContractError("dequeue from an empty queue")
        pending1, pending2 = len(self.queue1), len(self.queue2)
        task = (self.queue1 if self.queue1 else self.queue2).pop(0)
        self.log("dequeue", task=task.task_id, kind=task.kind,
                 pending1=pending1, pending2=pending2, worker=worker)
        return task

    def has_pending(self) -> bool:
        return bool(self.queue1 or self.queue2)

    def new_task(self, kind: int, **kw) -> Task:
        t = Task(task_id=self.next_task_id, kind=kind, enqueued_at=self.seq, **kw)
        self.next_task_id += 1
        return t

    def new_propose_task(self) -> Task:
        t = self.new_task(PROPOSE, weight=self.cycle.next_weight(),
                          ticket=self.next_ticket)
        self.next_ticket += 1
        return t

    # -- budget accounting -------------------------------------------------------

    @property
    def eval_commitments(self) -> int:
        """Real records plus every task that may still yield one evaluation."""
        pending = len(self.queue1) + len(self.queue2)
        return len(self.records) + len(self.in_flight) + pending

    def can_fit(self) -> bool:
        return len(self.nodes) >= self.domain.n + 1

    # -- completions ----------------------------------------------------------------

    def _append_record(self, task: Task, internal: float, failed: bool,
                       worker: Optional[int]):
        rec = EvalRecord(point=tuple(np.asarray(task.point, float).tolist()),
                         value=internal, kind=task.eval_kind,
                         sequence_id=len(self.records),
                         weight_used=task.weight, failed=failed)
        self.records.append(rec)
        self.wall_ms.append((time.monotonic() - self.t0) * 1000.0)
        self.worker_ids.append(worker if worker is not None else -1)
        self.nodes.add(scale_to_unit(task.point, self.domain), internal)
        if not failed:
            u = self.sense.to_user(internal)
            if self.best_user is None or self.sense.better(u, self.best_user):
                self.best_user = u
        self.log("eval_done", task=task.task_id,
                 point=np.asarray(task.point, float).tolist(),
                 value=self.sense.to_user(internal), internal=internal,
                 seq_id=rec.sequence_id, worker=worker, failed=failed)

    def on_eval_complete(self, task: Task, value: float,
                         worker: Optional[int] = None):
        """Record a finished evaluation: drop its temporary node, append the
        real record.  ``value`` is in user sense."""
        if task.task_id not in self.in_flight:
            raise ContractError(f"task {task.task_id} is not in flight")
        del self.in_flight[task.task_id]
        self.remove_temp(task.task_id)
        internal = self.sense.to_internal(value)
        self.consecutive_failures = 0
        self._append_record(task, internal, failed=False, worker=worker)

    def on_eval_failed(self, task: Task, worker: Optional[int] = None):
        """Penalty-record an evaluation whose retry also failed."""
        if task.task_id not in self.in_flight:
            raise ContractError(f"task {task.task_id} is not in flight")
        del self.in_flight[task.task_id]
        self.remove_temp(task.task_id)
        self.consecutive_failures += 1
        internal = penalty_value(self.nodes.real_values())
        self._append_record(task, internal, failed=True, worker=worker)

    def remove_temp(self, task_id: int):
        if task_id in self.temp_nodes:
            del self.temp_nodes[task_id]
            self.nodes.remove_temp(task_id)
            self.log("temp_remove", task=task_id)

    def on_proposal_complete(self, task: Task, proposal: Proposal,
                             model_snapshot: RbfModel) -> Optional[Task]:
        """Re-check the proposed point against the current nodes.  Accepted:
        reserve a temporary node (surrogate value clipped to the real-value
        range) and enqueue the evaluation.  Rejected: enqueue a replacement
        proposal task.  Returns the task that was enqueued."""
        if task.task_id not in self.in_flight:
            raise ContractError(f"task {task.task_id} is not in flight")
        del self.in_flight[task.task_id]
        point = np.asarray(proposal.point, dtype=float)
        u = scale_to_unit(point, self.domain)
        dmin = min_separation(self.domain.n)
        accepted = (len(self.nodes) == 0
                    or _min_dist_scaled(u, self.nodes) >= dmin)
        if not accepted:
            self.log("propose_done", task=task.task_id, accepted=False,
                     reason="too_close", point=point.tolist())
            replacement = self.new_propose_task()
            self.enqueue(replacement)
            return replacement

        real = self.nodes.real_values()
        lo, hi = float(np.min(real)), float(np.max(real))
        predicted = predict(model_snapshot, u)
        clipped = min(max(predicted, lo), hi)
        eval_task = self.new_task(EVALUATE, point=point,
                                  eval_kind=EvalKind.SEARCH,
                                  weight=proposal.weight_used)
        self.temp_nodes[eval_task.task_id] = TempNode(
            point=point, clipped_value=clipped, linked_task=eval_task.task_id)
        self.nodes.add(u, clipped, temporary=True, node_id=eval_task.task_id)
        self.log("propose_done", task=task.task_id, accepted=True,
                 point=point.tolist(), weight=proposal.weight_used,
                 source=proposal.source)
        self.log("temp_create", task=eval_task.task_id, point=point.tolist(),
                 predicted=predicted, clipped=clipped, real_min=lo, real_max=hi)
        self.enqueue(eval_task)
        return eval_task


class _Worker(threading.Thread):
    def __init__(self, wid: int, outbox: queue.Queue):
        super().__init__(daemon=True, name=f"rbfsearch-worker-{wid}")
        self.wid = wid
        self.inbox: queue.Queue = queue.Queue()
        self.outbox = outbox

    def run(self):
        while True:
            msg = self.inbox.get()
            if msg is None:
                return
            task_id, payload = msg
            try:
                result = payload()
                self.outbox.put(("done", self.wid, task_id, result))
            except Exception as exc:  # reported to the coordinator
                self.outbox.put(("error", self.wid, task_id, exc))


def run_parallel(objective: Callable, d: BoxDomain,
                 sense: ObjectiveSense = ObjectiveSense.MINIMIZE,
                 budget: Budget = Budget(max_evaluations=100),
                 config: Optional[OptimizerConfig] = None,
                 workers: int = 1,
                 rng: RngStream | int = 0) -> OptimizationResult:
    """Optimize with ``workers`` asynchronous evaluators.

    With workers=1 the evaluated point sequence matches the serial engine
    under the same seed.  The result carries the same guarantees as the
    serial path: no temporary records, no duplicate points, best taken over
    all real records.  ``result.events`` holds the audit log.
    """
    if workers < 1:
        raise SchedulerError("workers must be >= 1")
    cfg = config or OptimizerConfig()
    root = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    ga = cfg.ga_for(d.n)
    k0 = cfg.design_size or d.n + 1
    if budget.max_evaluations is not None and budget.max_evaluations < k0:
        raise EngineError(
            f"max_evaluations={budget.max_evaluations} below initial design size {k0}")

    state = SchedulerState(d, sense, workers, cfg)
    t0 = state.t0
    design = latin_hypercube(d, k0, root.child("design"))
    for p in design.points:
        state.enqueue(state.new_task(EVALUATE, point=np.asarray(p, float),
                                     eval_kind=EvalKind.INITIAL_DESIGN))

    outbox: queue.Queue = queue.Queue()
    pool = [_Worker(i, outbox) for i in range(workers)]
    for w in pool:
        w.start()
    idle = list(range(workers))
    tasks: dict[int, Task] = {}
    stop: Optional[StopReason] = None
    abort: Optional[Exception] = None

    def check_stop() -> Optional[StopReason]:
        if budget.target_value is not None and state.best_user is not None \
                and sense.better(state.best_user, budget.target_value):
            return StopReason.TARGET_REACHED
        if budget.max_evaluations is not None \
                and len(state.records) >= budget.max_evaluations:
            return StopReason.EVALS_EXHAUSTED
        if budget.max_wallclock is not None \
                and time.monotonic() - t0 >= budget.max_wallclock:
            return StopReason.TIME_EXHAUSTED
        return None

    def eval_payload(point: np.ndarray):
        def run():
            val = float(objective(point))
            if not np.isfinite(val):
                raise ValueError(f"objective returned {val}")
            return val
        return run

    def propose_payload(task: Task, snapshot):
        pts, vals = snapshot
        gen = root.child(f"propose:{task.ticket}").generator()
        weight = task.weight

        def run():
            model = fit(pts, cap_values(vals, cfg.value_cap), cfg.kernel)
            prop = propose_with_weight(model, pts, d, weight, ga, gen)
            return prop, model
        return run

    def budget_allows_proposal() -> bool:
        if budget.max_evaluations is None:
            return True
        return state.eval_commitments < budget.max_evaluations

    def dispatch():
        while idle:
            if state.has_pending():
                task = state.dequeue(worker=idle[0])
            elif state.can_fit() and budget_allows_proposal():
                task = state.new_propose_task()
                state.enqueue(task)
                task = state.dequeue(worker=idle[0])
            else:
                return
            wid = idle.pop(0)
            tasks[task.task_id] = task
            state.in_flight[task.task_id] = task
            if task.kind == EVALUATE:
                payload = eval_payload(task.point)
            else:
                payload = propose_payload(task, state.nodes.snapshot())
            pool[wid].inbox.put((task.task_id, payload))

    def process(msg):
        nonlocal stop, abort
        status, wid, task_id, result = msg
        idle.append(wid)
        task = tasks.pop(task_id)
        stopping = stop is not None or abort is not None
        if task.kind == EVALUATE:
            if status == "done":
                state.on_eval_complete(task, result, worker=wid)
            elif not task.retried and not stopping:
                task.retried = True
                del state.in_flight[task.task_id]
                state.log("requeue", task=task.task_id)
                state.enqueue(task)
            else:
                state.on_eval_failed(task, worker=wid)
                if state.consecutive_failures >= MAX_CONSECUTIVE_FAILURES:
                    abort = EngineError(
                        f"{state.consecutive_failures} consecutive evaluation "
                        "failures; aborting")
        elif status == "done":
            state.proposal_failures = 0
            prop, model = result
            if stopping:
                # completed after the run stopped: discard, never reserve
                del state.in_flight[task.task_id]
                state.log("propose_done", task=task.task_id, accepted=False,
                          reason="run_stopped")
            else:
                state.on_proposal_complete(task, prop, model)
        elif isinstance(result, ProposerError):
            del state.in_flight[task.task_id]
            state.log("propose_done", task=task.task_id, accepted=False,
                      reason="saturated")
            stop = stop or StopReason.PROPOSER_SATURATED
        else:
            del state.in_flight[task.task_id]
            state.proposal_failures += 1
            state.log("propose_done", task=task.task_id, accepted=False,
                      reason="failed")
            if state.proposal_failures >= MAX_PROPOSAL_FAILURES:
                abort = SchedulerError(
                    f"{state.proposal_failures} consecutive proposal "
                    f"failures; last: {result!r}")
            elif not stopping:
                state.enqueue(state.new_propose_task())

    try:
        while True:
            if stop is None and abort is None:
                stop = check_stop()
            if stop is not None or abort is not None:
                # no new dispatches; drain whatever is in flight
                if not state.in_flight:
                    break
            else:
                dispatch()
                if not state.in_flight:
                    # nothing running and nothing dispatchable: the queue is
                    # empty and no new proposal may be created
                    stop = check_stop() or StopReason.PROPOSER_SATURATED
                    continue
            process(outbox.get())
            while True:
                try:
                    process(outbox.get_nowait())
                except queue.Empty:
                    break
    finally:
        for w in pool:
            w.inbox.put(None)
        for w in pool:
            w.join(timeout=5.0)

    # tasks still queued when the run stopped are cancelled; release any
    # temporary nodes they reserved
    for task in state.queue1 + state.queue2:
        state.log("cancel", task=task.task_id, kind=task.kind)
        state.remove_temp(task.task_id)
    state.queue1.clear()
    state.queue2.clear()

    state.log("run_end", reason=None if stop is None else stop.value,
              records=len(state.records), surviving_temps=len(state.temp_nodes))
    if abort is not None:
        raise abort
    if not state.records:
        raise EngineError("stopping criterion fired before any evaluation ran")

    best_idx = int(np.argmin([r.value for r in state.records]))
    best = state.records[best_idx]
    return OptimizationResult(
        best_point=np.asarray(best.point, dtype=float),
        best_value=sense.to_user(best.value),
        evaluations=list(state.records),
        stopped_because=stop or StopReason.EVALS_EXHAUSTED,
        sense=sense,
        wall_ms=list(state.wall_ms),
        worker_ids=list(state.worker_ids),
        wall_time_s=time.monotonic() - t0,
        events=state.events,
    )


def audit_events(events: list[dict]) -> dict:
    """Post-run audit of a scheduler event log.

    Returns counters for the invariants the protocol guarantees: duplicate
    evaluated points, temporary nodes that were never removed, temporary
    values outside the real-value range at creation, and type-2 dequeues
    that happened while a type-1 task was pending.
    """
    eval_points = []
    temps_created, temps_removed = set(), set()
    out_of_range = 0
    priority_violations = 0
    for e in events:
        kind = e.get("event")
        if kind == "eval_done":
            eval_points.append(tuple(e["point"]))
        elif kind == "temp_create":
            temps_created.add(e["task"])
            if not (e["real_min"] <= e["clipped"] <= e["real_max"]):
                out_of_range += 1
        elif kind == "temp_remove":
            temps_removed.add(e["task"])
        elif kind == "dequeue" and e["kind"] == PROPOSE and e["pending1"] > 0:
            priority_violations += 1
    duplicates = len(eval_points) - len(set(eval_points))
    surviving = len(temps_created - temps_removed)
    return {
        "evaluations": len(eval_points),
        "duplicate_points": duplicates,
        "surviving_temps": surviving,
        "temp_value_out_of_range": out_of_range,
        "priority_violations": priority_violations,
        "ok": (duplicates == 0 and surviving == 0 and out_of_range == 0
               and priority_violations == 0),
    }
