"""Unit tests for the asynchronous two-queue scheduler."""

import time

import numpy as np
import pytest

from rbfsearch.core import BoxDomain, ContractError, ObjectiveSense
from rbfsearch.engine import Budget, OptimizerConfig, optimize
from rbfsearch.proposer import GaConfig, Proposal
from rbfsearch.scheduler import (
    EVALUATE,
    PROPOSE,
    SchedulerState,
    audit_events,
    run_parallel,
)
from rbfsearch.surrogate import fit


def bowl(x):
    return float(np.sum((np.asarray(x) - 0.3) ** 2))


def fresh_state(n=1):
    d = BoxDomain(np.zeros(n), np.ones(n))
    return SchedulerState(d, ObjectiveSense.MINIMIZE, workers=2,
                          config=OptimizerConfig())


def flat_model_1d(c):
    """1-D interpolant that predicts the constant c everywhere."""
    return fit(np.array([[0.0], [1.0]]), np.array([c, c]))


class TestQueuePriority:
    def test_type1_dequeued_before_type2(self):
        st = fresh_state()
        p = st.new_propose_task()
        st.enqueue(p)
        e = st.new_task(EVALUATE, point=np.array([0.5]))
        st.enqueue(e)
        assert st.dequeue().kind == EVALUATE
        assert st.dequeue().kind == PROPOSE

    def test_fifo_within_kind(self):
        st = fresh_state()
        a = st.new_task(EVALUATE, point=np.array([0.1]))
        b = st.new_task(EVALUATE, point=np.array([0.2]))
        st.enqueue(a)
        st.enqueue(b)
        assert st.dequeue().task_id == a.task_id
        assert st.dequeue().task_id == b.task_id

    def test_empty_dequeue_rejected(self):
        st = fresh_state()
        with pytest.raises(ContractError):
            st.dequeue()

    def test_dequeue_logs_pending_counts_before_pop(self):
        st = fresh_state()
        st.enqueue(st.new_task(EVALUATE, point=np.array([0.1])))
        st.enqueue(st.new_task(EVALUATE, point=np.array([0.2])))
        st.dequeue()
        ev = [e for e in st.events if e["event"] == "dequeue"][-1]
        assert ev["pending1"] == 2
        assert ev["pending2"] == 0

    def test_propose_tasks_draw_cycle_weights_in_order(self):
        st = fresh_state()
        tasks = [st.new_propose_task() for _ in range(6)]
        assert [t.weight for t in tasks] == [0.95, 0.75, 0.50, 0.25, 0.05, 0.95]
        assert [t.ticket for t in tasks] == [0, 1, 2, 3, 4, 5]

    def test_eval_commitments_counts_queue_and_flight(self):
        st = fresh_state()
        assert st.eval_commitments == 0
        t = st.new_task(EVALUATE, point=np.array([0.5]))
        st.enqueue(t)
        assert st.eval_commitments == 1
        st.in_flight[st.dequeue().task_id] = t
        assert st.eval_commitments == 1

    def test_can_fit_needs_n_plus_one_nodes(self):
        st = fresh_state(n=2)
        assert not st.can_fit()
        for i, p in enumerate([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]):
            st.nodes.add(p, float(i))
        assert st.can_fit()


class TestProposalCompletion:
    def seed_state(self):
        st = fresh_state()
        st.nodes.add([0.05], 0.2)
        st.nodes.add([0.95], 0.9)
        return st

    def complete(self, st, predicted_const, point=0.5):
        task = st.new_task(PROPOSE, weight=0.95, ticket=0)
        st.in_flight[task.task_id] = task
        prop = Proposal(point=np.array([point]), weight_used=0.95, accepted=True)
        return st.on_proposal_complete(task, prop, flat_model_1d(predicted_const))

    def test_high_prediction_clipped_to_real_max(self):
        st = self.seed_state()
        ev = self.complete(st, 1.5)
        assert st.temp_nodes[ev.task_id].clipped_value == 0.9
        created = [e for e in st.events if e["event"] == "temp_create"][-1]
        assert created["predicted"] == pytest.approx(1.5)
        assert created["clipped"] == 0.9
        assert created["real_min"] == 0.2
        assert created["real_max"] == 0.9

    def test_low_prediction_clipped_to_real_min(self):
        st = self.seed_state()
        ev = self.complete(st, -3.0)
        assert st.temp_nodes[ev.task_id].clipped_value == 0.2

    def test_interior_prediction_untouched(self):
        st = self.seed_state()
        ev = self.complete(st, 0.5)
        assert st.temp_nodes[ev.task_id].clipped_value == 0.5

    def test_accepted_proposal_enqueues_evaluation(self):
        st = self.seed_state()
        ev = self.complete(st, 0.5)
        assert ev.kind == EVALUATE
        assert st.queue1[0].task_id == ev.task_id
        # temp node participates in the interpolation set
        assert len(st.nodes) == 3
        assert st.nodes.n_real == 2

    def test_stale_proposal_rejected_and_replaced(self):
        # another worker finished at the same spot while this proposal was
        # being computed: the completion re-check must reject it
        st = self.seed_state()
        task = st.new_task(PROPOSE, weight=0.5, ticket=0)
        st.in_flight[task.task_id] = task
        prop = Proposal(point=np.array([0.05 + 1e-5]), weight_used=0.5,
                        accepted=True)
        replacement = st.on_proposal_complete(task, prop, flat_model_1d(0.5))
        assert replacement.kind == PROPOSE
        assert st.queue2[0].task_id == replacement.task_id
        done = [e for e in st.events if e["event"] == "propose_done"][-1]
        assert done["accepted"] is False
        assert done["reason"] == "too_close"

    def test_unknown_task_rejected(self):
        st = self.seed_state()
        task = st.new_task(PROPOSE, weight=0.5, ticket=0)
        prop = Proposal(point=np.array([0.5]), weight_used=0.5, accepted=True)
        with pytest.raises(ContractError):
            st.on_proposal_complete(task, prop, flat_model_1d(0.5))


class TestEvalCompletion:
    def test_complete_drops_temp_and_appends_record(self):
        st = fresh_state()
        st.nodes.add([0.05], 0.2)
        st.nodes.add([0.95], 0.9)
        task = st.new_task(PROPOSE, weight=0.95, ticket=0)
        st.in_flight[task.task_id] = task
        prop = Proposal(point=np.array([0.5]), weight_used=0.95, accepted=True)
        ev = st.on_proposal_complete(task, prop, flat_model_1d(0.5))
        st.dequeue()
        st.in_flight[ev.task_id] = ev
        st.on_eval_complete(ev, 0.42, worker=1)
        assert ev.task_id not in st.temp_nodes
        assert len(st.nodes) == 3 and st.nodes.n_real == 3
        assert st.records[-1].value == 0.42
        assert st.records[-1].weight_used == 0.95
        removed = [e for e in st.events if e["event"] == "temp_remove"]
        assert removed and removed[-1]["task"] == ev.task_id

    def test_failed_eval_gets_penalty(self):
        st = fresh_state()
        st.nodes.add([0.1], 1.0)
        st.nodes.add([0.9], 3.0)
        task = st.new_task(EVALUATE, point=np.array([0.5]))
        st.in_flight[task.task_id] = task
        st.on_eval_failed(task, worker=0)
        assert st.records[-1].failed
        assert st.records[-1].value == 5.0  # max + range of {1, 3}
        assert st.consecutive_failures == 1

    def test_completion_requires_in_flight(self):
        st = fresh_state()
        task = st.new_task(EVALUATE, point=np.array([0.5]))
        with pytest.raises(ContractError):
            st.on_eval_complete(task, 1.0)


class TestRunParallel:
    def test_single_worker_matches_serial_engine(self):
        d = BoxDomain([0, 0], [1, 1])
        serial = optimize(bowl, d, budget=Budget(max_evaluations=20), rng=5)
        par = run_parallel(bowl, d, budget=Budget(max_evaluations=20),
                           workers=1, rng=5)
        assert [r.point for r in par.evaluations] == \
               [r.point for r in serial.evaluations]
        assert par.best_value == serial.best_value

    def test_four_workers_complete_budget(self):
        d = BoxDomain([0, 0], [1, 1])
        res = run_parallel(bowl, d, budget=Budget(max_evaluations=30),
                           workers=4, rng=6)
        assert res.n_evaluations == 30
        assert len({r.point for r in res.evaluations}) == 30
        for r in res.evaluations:
            assert d.contains(r.point)
        assert res.best_value == pytest.approx(
            min(r.value for r in res.evaluations))

    def test_event_log_passes_audit(self):
        d = BoxDomain([0, 0], [1, 1])
        res = run_parallel(bowl, d, budget=Budget(max_evaluations=40),
                           workers=4, rng=7)
        audit = audit_events(res.events)
        assert audit["ok"], audit
        assert audit["evaluations"] == 40

    def test_multiple_workers_used(self):
        d = BoxDomain([0, 0], [1, 1])

        def slow(x):
            time.sleep(0.01)
            return bowl(x)

        res = run_parallel(slow, d, budget=Budget(max_evaluations=24),
                           workers=4, rng=8)
        assert len(set(res.worker_ids)) > 1

    def test_latency_overlap_beats_single_worker(self):
        d = BoxDomain([0, 0], [1, 1])

        def slow(x):
            time.sleep(0.04)
            return bowl(x)

        t0 = time.monotonic()
        run_parallel(slow, d, budget=Budget(max_evaluations=24), workers=1, rng=9)
        t1 = time.monotonic() - t0
        t0 = time.monotonic()
        run_parallel(slow, d, budget=Budget(max_evaluations=24), workers=4, rng=9)
        t4 = time.monotonic() - t0
        assert t1 / t4 > 1.5

    def test_failures_are_tolerated(self):
        d = BoxDomain([0, 0], [1, 1])
        state = {"n": 0}

        def flaky(x):
            state["n"] += 1
            if state["n"] % 5 == 0:
                raise RuntimeError("crash")
            return bowl(x)

        res = run_parallel(flaky, d, budget=Budget(max_evaluations=25),
                           workers=4, rng=10)
        assert res.n_evaluations == 25
        assert audit_events(res.events)["ok"]

    def test_maximize_sense(self):
        d = BoxDomain([0, 0], [1, 1])
        res = run_parallel(lambda x: -bowl(x), d, ObjectiveSense.MAXIMIZE,
                           Budget(max_evaluations=25), workers=2, rng=11)
        assert res.best_value == pytest.approx(
            max(-r.value for r in res.evaluations))

    def test_single_worker_reproducible(self):
        d = BoxDomain([0, 0], [1, 1])
        a = run_parallel(bowl, d, budget=Budget(max_evaluations=15),
                         workers=1, rng=12)
        b = run_parallel(bowl, d, budget=Budget(max_evaluations=15),
                         workers=1, rng=12)
        assert [r.point for r in a.evaluations] == [r.point for r in b.evaluations]

    def test_worker_count_validated(self):
        d = BoxDomain([0], [1])
        with pytest.raises(Exception):
            run_parallel(bowl, d, budget=Budget(max_evaluations=5), workers=0)


class TestAuditEvents:
    def test_clean_log(self):
        events = [
            {"event": "temp_create", "task": 1, "clipped": 0.5,
             "real_min": 0.0, "real_max": 1.0},
            {"event": "temp_remove", "task": 1},
            {"event": "eval_done", "point": [0.1]},
            {"event": "eval_done", "point": [0.2]},
            {"event": "dequeue", "kind": PROPOSE, "pending1": 0, "pending2": 1},
        ]
        audit = audit_events(events)
        assert audit["ok"]
        assert audit["evaluations"] == 2

    def test_duplicate_points_flagged(self):
        events = [{"event": "eval_done", "point": [0.1, 0.2]},
                  {"event": "eval_done", "point": [0.1, 0.2]}]
        audit = audit_events(events)
        assert not audit["ok"]
        assert audit["duplicate_points"] == 1

    def test_surviving_temp_flagged(self):
        events = [{"event": "temp_create", "task": 3, "clipped": 0.5,
                   "real_min": 0.0, "real_max": 1.0}]
        audit = audit_events(events)
        assert not audit["ok"]
        assert audit["surviving_temps"] == 1

    def test_out_of_range_temp_flagged(self):
        events = [{"event": "temp_create", "task": 3, "clipped": 1.5,
                   "real_min": 0.0, "real_max": 1.0},
                  {"event": "temp_remove", "task": 3}]
        audit = audit_events(events)
        assert not audit["ok"]
        assert audit["temp_value_out_of_range"] == 1

    def test_priority_violation_flagged(self):
        events = [{"event": "dequeue", "kind": PROPOSE,
                   "pending1": 2, "pending2": 0}]
        audit = audit_events(events)
        assert not audit["ok"]
        assert audit["priority_violations"] == 1

    def test_evaluate_dequeue_never_violates(self):
        events = [{"event": "dequeue", "kind": EVALUATE,
                   "pending1": 2, "pending2": 5}]
        assert audit_events(events)["ok"]
