"""Wire protocol for external objective evaluators.

An evaluator is any program that reads line-delimited JSON requests on its
standard input and answers one line per request on its standard output.
Request fields: {"id": int, "params": {name: value}}.  Response fields:
{"id": int, "objective": number}, plus optional {"error": string}.  The
parameter map holds decoded hyperparameter values (not raw box
coordinates) when a search space is attached.

Every protocol violation (timeout, EOF, malformed line, id mismatch,
missing objective, reported error) raises ProtocolError, which the engine
treats as a failed evaluation under its penalty policy.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Optional

import numpy as np

from .core import BoxDomain
from .hpo import HpoSpace, decode


class ProtocolError(RuntimeError):
    """Raised when the evaluator child misbehaves."""


def encode_request(req_id: int, params: dict) -> str:
    return json.dumps({"id": req_id, "params": params})


def decode_response(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed response line {line!r}: {exc}")
    if not isinstance(obj, dict):
        raise ProtocolError(f"response must be a JSON object, got {line!r}")
    return obj


def params_for_point(x, space: Optional[HpoSpace] = None,
                     domain: Optional[BoxDomain] = None) -> dict:
    """Parameter map sent on the wire: decoded values when a space is
    attached, else positional names x0..x{n-1}."""
    x = np.asarray(x, dtype=float)
    if space is not None:
        return decode(space, x)
    if domain is not None and x.shape != domain.lower.shape:
        raise ProtocolError(f"point has shape {x.shape}, domain is {domain.n}-dimensional")
    return {f"x{i}": float(v) for i, v in enumerate(x)}


class ExternalEvaluator:
    """One child process speaking the line protocol.

    Not safe for concurrent use from multiple threads; give each worker its
    own instance (see ExternalObjective).
    """

    def __init__(self, command: str | list, timeout: Optional[float] = None):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ProtocolError("empty evaluator command")
        self.command = argv
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
                bufsize=1)
        except OSError as exc:
            raise ProtocolError(f"cannot start evaluator {argv!r}: {exc}")
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._next_id = 0

    def _read_loop(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def evaluate(self, params: dict) -> float:
        """Send one request, wait for the matching response, return the
        objective value."""
        req_id = self._next_id
        self._next_id += 1
        try:
            self._proc.stdin.write(encode_request(req_id, params) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ProtocolError(f"evaluator closed its input: {exc}")
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ProtocolError(f"no response within {self.timeout} s")
        if line is None:
            raise ProtocolError(
                f"evaluator exited (code {self._proc.poll()}) before responding")
        resp = decode_response(line)
        if "error" in resp:
            raise ProtocolError(f"evaluator reported error: {resp['error']}")
        if resp.get("id") != req_id:
            raise ProtocolError(f"response id {resp.get('id')!r} does not match "
                                f"request id {req_id}")
        if "objective" not in resp:
            raise ProtocolError(f"response missing 'objective': {line!r}")
        try:
            return float(resp["objective"])
        except (TypeError, ValueError):
            raise ProtocolError(f"objective is not a number: {resp['objective']!r}")

    def close(self):
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def evaluate_external(command: str | list, params: dict,
                      timeout: Optional[float] = None) -> float:
    """One-shot protocol exchange: spawn, evaluate once, shut down."""
    with ExternalEvaluator(command, timeout=timeout) as ev:
        return ev.evaluate(params)


class ExternalObjective:
    """Objective callable backed by per-thread evaluator children.

    Each calling thread gets its own child process, so the scheduler's
    workers can evaluate concurrently without interleaving protocol lines.
    """

    def __init__(self, command: str | list, space: Optional[HpoSpace] = None,
                 domain: Optional[BoxDomain] = None,
                 timeout: Optional[float] = None):
        self.command = command
        self.space = space
        self.domain = domain
        self.timeout = timeout
        self._local = threading.local()
        self._instances: list[ExternalEvaluator] = []
        self._lock = threading.Lock()

    def _evaluator(self) -> ExternalEvaluator:
        ev = getattr(self._local, "evaluator", None)
        if ev is None:
            ev = ExternalEvaluator(self.command, timeout=self.timeout)
            self._local.evaluator = ev
            with self._lock:
                self._instances.append(ev)
        return ev

    def __call__(self, x) -> float:
        params = params_for_point(x, self.space, self.domain)
        return self._evaluator().evaluate(params)

    def close(self):
        with self._lock:
            instances, self._instances = self._instances, []
        for ev in instances:
            ev.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
