"""Line-delimited JSON logs of optimization runs.

The result log has one object per evaluation with a fixed field order
{seq, kind, point, params, value, t_wall_ms, weight, worker}; values are
user-sense.  Two runs with identical config and seed produce byte-identical
result logs except for the t_wall_ms field.  The event log serializes the
scheduler's audit trail one event per line.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import ContractError, ObjectiveSense
from .engine import OptimizationResult
from .hpo import HpoSpace, decode


def _plain(value):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def result_log_lines(result: OptimizationResult,
                     space: Optional[HpoSpace] = None) -> list[str]:
    """Result records as JSON lines in the fixed field order."""
    lines = []
    for i, rec in enumerate(result.evaluations):
        point = [float(v) for v in rec.point]
        if space is not None:
            params = _plain(decode(space, point))
        else:
            params = {f"x{j}": v for j, v in enumerate(point)}
        t_ms = result.wall_ms[i] if i < len(result.wall_ms) else None
        worker = result.worker_ids[i] if i < len(result.worker_ids) else None
        obj = {
            "seq": rec.sequence_id,
            "kind": rec.kind.value,
            "point": point,
            "params": params,
            "value": result.sense.to_user(rec.value),
            "t_wall_ms": t_ms,
            "weight": rec.weight_used,
            "worker": worker,
        }
        if rec.failed:
            obj["failed"] = True
        lines.append(json.dumps(obj, separators=(",", ":")))
    return lines


def write_result_log(result: OptimizationResult, path,
                     space: Optional[HpoSpace] = None) -> None:
    Path(path).write_text("\n".join(result_log_lines(result, space)) + "\n")


def write_event_log(events: Iterable[dict], path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(_plain(e), separators=(",", ":")) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def strip_timing(lines: Iterable[str]) -> list[str]:
    """Re-serialize log lines with the wall-clock field removed, for
    byte-level comparison of runs."""
    out = []
    for line in lines:
        obj = json.loads(line)
        obj.pop("t_wall_ms", None)
        out.append(json.dumps(obj, separators=(",", ":")))
    return out


def replay_best_trace(path,
                      sense: ObjectiveSense = ObjectiveSense.MINIMIZE) -> np.ndarray:
    """Running best value after each logged evaluation, reconstructed purely
    from the result log."""
    records = read_jsonl(path)
    if not records:
        raise ContractError(f"empty result log {path}")
    seqs = [r["seq"] for r in records]
    if seqs != sorted(seqs):
        raise ContractError("result log records are not ordered by seq")
    values = np.array([r["value"] for r in records], dtype=float)
    if sense is ObjectiveSense.MINIMIZE:
        return np.minimum.accumulate(values)
    return np.maximum.accumulate(values)
