"""Unit tests for the external-evaluator line protocol."""

import json
import sys
import threading

import numpy as np
import pytest

from rbfsearch.core import BoxDomain
from rbfsearch.hpo import HpoSpace, LayeredGroup, ParamSpec
from rbfsearch.protocol import (
    ExternalEvaluator,
    ExternalObjective,
    ProtocolError,
    decode_response,
    encode_request,
    evaluate_external,
    params_for_point,
)

SUM_EVALUATOR = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    vals = [v for v in req["params"].values() if isinstance(v, (int, float))]
    print(json.dumps({"id": req["id"], "objective": sum(vals)}), flush=True)
"""


def script_cmd(tmp_path, body, name="eval.py"):
    path = tmp_path / name
    path.write_text(body)
    return [sys.executable, str(path)]


class TestWireEncoding:
    def test_request_shape(self):
        line = encode_request(7, {"x0": 1.5, "act": "relu"})
        obj = json.loads(line)
        assert obj == {"id": 7, "params": {"x0": 1.5, "act": "relu"}}

    def test_response_round_trip(self):
        assert decode_response('{"id": 3, "objective": 2.5}') == \
            {"id": 3, "objective": 2.5}

    def test_malformed_line_rejected(self):
        with pytest.raises(ProtocolError):
            decode_response("not json at all")

    def test_non_object_rejected(self):
        with pytest.raises(ProtocolError):
            decode_response("[1, 2, 3]")


class TestParamsForPoint:
    def test_positional_names_without_space(self):
        params = params_for_point([1.0, 2.5])
        assert params == {"x0": 1.0, "x1": 2.5}

    def test_space_decodes_values(self):
        space = HpoSpace(
            params=(ParamSpec("lr", "log10_continuous", low=-4, high=-1),),
            groups=(LayeredGroup("units", max_layers=2, size_low=1,
                                 size_high=3),))
        params = params_for_point([-2.0, 2, 3, 1], space=space)
        assert params == {"lr": pytest.approx(0.01), "units": [2]}

    def test_domain_shape_checked(self):
        d = BoxDomain([0, 0], [1, 1])
        with pytest.raises(ProtocolError):
            params_for_point([1.0], domain=d)
        assert params_for_point([0.5, 0.5], domain=d) == {"x0": 0.5, "x1": 0.5}


class TestExternalEvaluator:
    def test_evaluates_sum(self, tmp_path):
        with ExternalEvaluator(script_cmd(tmp_path, SUM_EVALUATOR)) as ev:
            assert ev.evaluate({"x0": 1.0, "x1": 2.0}) == 3.0
            assert ev.evaluate({"x0": -1.5}) == -1.5

    def test_accepts_command_string(self, tmp_path):
        path = tmp_path / "eval.py"
        path.write_text(SUM_EVALUATOR)
        with ExternalEvaluator(f"{sys.executable} {path}") as ev:
            assert ev.evaluate({"x0": 4.0}) == 4.0

    def test_reported_error_raises(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "error": "boom"}), flush=True)
"""
        with ExternalEvaluator(script_cmd(tmp_path, body)) as ev:
            with pytest.raises(ProtocolError, match="boom"):
                ev.evaluate({"x0": 1.0})

    def test_id_mismatch_raises(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"] + 1, "objective": 0.0}), flush=True)
"""
        with ExternalEvaluator(script_cmd(tmp_path, body)) as ev:
            with pytest.raises(ProtocolError, match="id"):
                ev.evaluate({"x0": 1.0})

    def test_missing_objective_raises(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"]}), flush=True)
"""
        with ExternalEvaluator(script_cmd(tmp_path, body)) as ev:
            with pytest.raises(ProtocolError, match="objective"):
                ev.evaluate({"x0": 1.0})

    def test_non_numeric_objective_raises(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "objective": "NaN-ish"}), flush=True)
"""
        with ExternalEvaluator(script_cmd(tmp_path, body)) as ev:
            with pytest.raises(ProtocolError, match="not a number"):
                ev.evaluate({"x0": 1.0})

    def test_timeout_raises(self, tmp_path):
        body = "import time\ntime.sleep(30)\n"
        with ExternalEvaluator(script_cmd(tmp_path, body), timeout=0.3) as ev:
            with pytest.raises(ProtocolError, match="no response"):
                ev.evaluate({"x0": 1.0})

    def test_immediate_exit_raises(self, tmp_path):
        with ExternalEvaluator(script_cmd(tmp_path, "pass\n")) as ev:
            with pytest.raises(ProtocolError, match="exited"):
                ev.evaluate({"x0": 1.0})

    def test_empty_command_rejected(self):
        with pytest.raises(ProtocolError):
            ExternalEvaluator("")

    def test_missing_binary_rejected(self):
        with pytest.raises(ProtocolError):
            ExternalEvaluator(["/nonexistent/evaluator-binary"])


def test_evaluate_external_one_shot(tmp_path):
    value = evaluate_external(script_cmd(tmp_path, SUM_EVALUATOR),
                              {"a": 2.0, "b": 3.0})
    assert value == 5.0


class TestExternalObjective:
    def test_callable_maps_point_to_params(self, tmp_path):
        with ExternalObjective(script_cmd(tmp_path, SUM_EVALUATOR)) as obj:
            assert obj(np.array([1.0, 2.0, 3.0])) == 6.0

    def test_each_thread_gets_its_own_child(self, tmp_path):
        with ExternalObjective(script_cmd(tmp_path, SUM_EVALUATOR)) as obj:
            results = {}

            def work(tid):
                results[tid] = obj(np.full(3, float(tid)))

            threads = [threading.Thread(target=work, args=(t,)) for t in range(3)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert results == {0: 0.0, 1: 3.0, 2: 6.0}
            assert len(obj._instances) == 3

    def test_space_attached_sends_decoded_params(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    p = req["params"]
    assert set(p) == {"lr", "units"}, p
    print(json.dumps({"id": req["id"],
                      "objective": p["lr"] + sum(p["units"])}), flush=True)
"""
        space = HpoSpace(
            params=(ParamSpec("lr", "continuous", low=0.0, high=1.0),),
            groups=(LayeredGroup("units", max_layers=2, size_low=1,
                                 size_high=3),))
        with ExternalObjective(script_cmd(tmp_path, body), space=space) as obj:
            assert obj([0.5, 2, 3, 2]) == pytest.approx(5.5)

    def test_drives_a_full_optimization(self, tmp_path):
        body = """\
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    p = req["params"]
    v = (p["x0"] - 0.25) ** 2 + (p["x1"] - 0.75) ** 2
    print(json.dumps({"id": req["id"], "objective": v}), flush=True)
"""
        from rbfsearch.engine import Budget
        from rbfsearch.scheduler import run_parallel

        d = BoxDomain([0, 0], [1, 1])
        with ExternalObjective(script_cmd(tmp_path, body), domain=d) as obj:
            res = run_parallel(obj, d, budget=Budget(max_evaluations=25),
                               workers=2, rng=3)
        assert res.n_evaluations == 25
        assert res.best_value < 0.05
