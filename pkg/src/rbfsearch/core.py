"""Domain representation, point scaling, evaluation records and seeded RNG streams.

Everything downstream (design, surrogate, proposer, engine, scheduler) works
on a box domain with optional integrality constraints.  All distances are
computed in the scaled unit hypercube, and all optimization is carried out
internally in minimization sense; maximization is handled by negating values
at the boundary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a point or bound specification violates the box domain."""


class ContractError(ValueError):
    """Raised when an operation is called outside its stated preconditions."""


class BoxDomain:
    """A hyperrectangle with optional integer-constrained dimensions.

    :param lower: lower bound per dimension
    :param upper: upper bound per dimension (strictly above lower)
    :param integer_dims: 0-based indices of dimensions restricted to integers
    """

    def __init__(self, lower, upper, integer_dims: Iterable[int] = ()):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.integer_dims = frozenset(int(i) for i in integer_dims)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise DomainError("lower and upper must be 1-D vectors of equal length")
        if self.lower.size < 1:
            raise DomainError("domain must have at least one dimension")
        if not np.all(self.lower < self.upper):
            raise DomainError("all bounds must satisfy lower < upper (no zero-width dims)")
        for i in self.integer_dims:
            if i < 0 or i >= self.lower.size:
                raise DomainError(f"integer dim index {i} out of range")
            if self.lower[i] != round(self.lower[i]) or self.upper[i] != round(self.upper[i]):
                raise DomainError(f"integer dim {i} must have integer bounds")

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            x.shape == self.lower.shape
            and np.all(x >= self.lower - atol)
            and np.all(x <= self.upper + atol)
        )

    def __repr__(self):
        return (
            f"BoxDomain(n={self.n}, integer_dims={sorted(self.integer_dims)})"
        )


class EvalKind(str, Enum):
    INITIAL_DESIGN = "initial_design"
    SEARCH = "search"
    TEMPORARY = "temporary"


class ObjectiveSense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"

    def to_internal(self, value: float) -> float:
        """Map a user-sense objective value to internal minimization sense."""
        return value if self is ObjectiveSense.MINIMIZE else -value

    def to_user(self, value: float) -> float:
        """Map an internal minimization-sense value back to user sense."""
        return value if self is ObjectiveSense.MINIMIZE else -value

    def better(self, a: float, b: float) -> bool:
        """True if user-sense value a is at least as good as b."""
        return a <= b if self is ObjectiveSense.MINIMIZE else a >= b


@dataclass(frozen=True)
class EvalRecord:
    """One completed objective evaluation.

    ``value`` is stored in internal minimization sense.  ``weight_used`` is
    the exploration/exploitation weight of the proposal that produced the
    point, when there was one.
    """

    point: tuple
    value: float
    kind: EvalKind
    sequence_id: int
    weight_used: Optional[float] = None
    failed: bool = False


def _label_entropy(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible pseudo-random stream.

    Identical (master_seed, stream_label) pairs yield bit-identical draw
    sequences across runs: the generator is numpy's PCG64 seeded through a
    SeedSequence built from the master seed and a SHA-256 hash of the label.
    """

    master_seed: int
    stream_label: str = "root"

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence([self.master_seed & 0xFFFFFFFFFFFFFFFF]
                                     + _label_entropy(self.stream_label))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, label: str) -> "RngStream":
        """Derive a labeled substream (e.g. per module or per task)."""
        return RngStream(self.master_seed, f"{self.stream_label}/{label}")


def scale_to_unit(x, d: BoxDomain) -> np.ndarray:
    """Map an in-box point to the unit hypercube."""
    x = np.asarray(x, dtype=float)
    if not d.contains(x):
        raise DomainError(f"point {x} outside bounds")
    return (x - d.lower) / d.span


def unscale(u, d: BoxDomain) -> np.ndarray:
    """Inverse of :func:`scale_to_unit`."""
    u = np.asarray(u, dtype=float)
    return d.lower + u * d.span


def snap_integers(x, d: BoxDomain) -> np.ndarray:
    """Round integer dimensions to the nearest integer, half away from zero,
    then clamp to the bounds.  Non-integer dimensions pass through unchanged."""
    x = np.array(x, dtype=float, copy=True)
    if not d.contains(x):
        raise DomainError(f"point {x} outside bounds")
    for i in d.integer_dims:
        v = np.sign(x[i]) * np.floor(np.abs(x[i]) + 0.5)
        x[i] = min(max(v, d.lower[i]), d.upper[i])
    return x


class NodeSet:
    """The interpolation set: scaled points, internal-sense values and
    temporary-node flags.

    Temporary nodes are placeholders for in-flight evaluations; they carry a
    clipped surrogate value and are removed once the real value arrives.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self._points: list[np.ndarray] = []
        self._values: list[float] = []
        self._temp_ids: dict[int, int] = {}  # node_id -> index into lists
        self._node_ids: list[Optional[int]] = []

    def __len__(self):
        return len(self._points)

    @property
    def n_real(self) -> int:
        return len(self._points) - len(self._temp_ids)

    def add(self, point_scaled, value: float, temporary: bool = False,
            node_id: Optional[int] = None) -> None:
        p = np.asarray(point_scaled, dtype=float)
        if p.shape != (self.dim,):
            raise ContractError(f"point has shape {p.shape}, expected ({self.dim},)")
        if temporary and node_id is None:
            raise ContractError("temporary nodes require a node_id")
        self._points.append(p)
        self._values.append(float(value))
        self._node_ids.append(node_id if temporary else None)
        if temporary:
            self._temp_ids[node_id] = len(self._points) - 1

    def remove_temp(self, node_id: int) -> None:
        if node_id not in self._temp_ids:
            raise ContractError(f"no temporary node with id {node_id}")
        idx = self._temp_ids.pop(node_id)
        del self._points[idx]
        del self._values[idx]
        del self._node_ids[idx]
        for nid, j in self._temp_ids.items():
            if j > idx:
                self._temp_ids[nid] = j - 1

    def points(self) -> np.ndarray:
        """All scaled points (real + temporary) as a k x n array."""
        if not self._points:
            return np.empty((0, self.dim))
        return np.vstack(self._points)

    def values(self) -> np.ndarray:
        return np.asarray(self._values, dtype=float)

    def real_values(self) -> np.ndarray:
        mask = [nid is None for nid in self._node_ids]
        return np.asarray([v for v, m in zip(self._values, mask) if m], dtype=float)

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        """Immutable copy of (points, values) for concurrent consumers."""
        return self.points().copy(), self.values().copy()


def min_scaled_distance(x, nodes: NodeSet | np.ndarray, d: BoxDomain) -> float:
    """Euclidean distance from scaled x to the nearest scaled node.

    ``nodes`` may be a NodeSet (which stores scaled points) or an array of
    raw in-box points, which are scaled here.
    """
    if isinstance(nodes, NodeSet):
        pts = nodes.points()
    else:
        raw = np.atleast_2d(np.asarray(nodes, dtype=float))
        pts = (raw - d.lower) / d.span
    if pts.size == 0:
        raise ContractError("min_scaled_distance requires a nonempty node set")
    u = scale_to_unit(x, d)
    return float(np.min(np.linalg.norm(pts - u, axis=1)))
