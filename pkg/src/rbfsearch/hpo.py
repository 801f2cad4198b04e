"""Hyperparameter search spaces and their box-constrained encodings.

A space is an ordered list of scalar parameters plus optional layered
groups describing variable-depth architectures.  A group with up to u
layers becomes u integer size variables plus one integer count variable in
[0, u]; decoding keeps the first ``count`` sizes, so every point of the box
decodes to a structurally valid architecture.  The ``naive`` encoding drops
the count variable and instead bounds every size in [0, l], decoding all
nonzero sizes; it exists for cost-comparison experiments, since it tends to
produce much denser architectures under uniform sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BoxDomain, RngStream, snap_integers

PARAM_KINDS = ("continuous", "log10_continuous", "integer", "categorical")
ENCODINGS = ("count_variable", "naive")


class SpaceError(ValueError):
    """Raised for malformed space descriptions."""


@dataclass(frozen=True)
class ParamSpec:
    """One scalar hyperparameter.

    ``low``/``high`` bound the value; for log10_continuous they bound the
    exponent, so a rate searched between 1e-4 and 1e-1 is declared with
    low=-4, high=-1.  Categorical parameters carry an ordered label list
    and are encoded as an integer dimension over label indices.
    """

    name: str
    kind: str
    low: Optional[float] = None
    high: Optional[float] = None
    categories: tuple = ()

    def __post_init__(self):
        if not self.name:
            raise SpaceError("parameter needs a name")
        if self.kind not in PARAM_KINDS:
            raise SpaceError(f"unknown parameter kind {self.kind!r}; "
                             f"choose from {PARAM_KINDS}")
        object.__setattr__(self, "categories", tuple(self.categories))
        if self.kind == "categorical":
            if len(self.categories) < 2:
                raise SpaceError(f"categorical {self.name!r} needs >= 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise SpaceError(f"categorical {self.name!r} has duplicate labels")
        else:
            if self.low is None or self.high is None:
                raise SpaceError(f"parameter {self.name!r} needs low and high")
            if not self.low < self.high:
                raise SpaceError(f"parameter {self.name!r} needs low < high")
            if self.kind == "integer" and (
                    self.low != round(self.low) or self.high != round(self.high)):
                raise SpaceError(f"integer parameter {self.name!r} needs integer bounds")

    def bounds(self) -> tuple[float, float]:
        """(low, high) of the encoded dimension."""
        if self.kind == "categorical":
            return 0.0, float(len(self.categories) - 1)
        return float(self.low), float(self.high)

    @property
    def is_integer_dim(self) -> bool:
        return self.kind in ("integer", "categorical")


@dataclass(frozen=True)
class LayeredGroup:
    """A variable-depth stack of layers, each with an integer size.

    Sizes range over size_low..size_high in multiples of size_step and are
    stored internally as step multipliers, so 10..500 step 10 becomes the
    integer range [1, 50].  size_low 0 is allowed; decoded zero sizes are
    skipped, which is what makes exhaustive enumeration of the encoded box
    land only on valid architectures.
    """

    name: str
    max_layers: int
    size_low: int
    size_high: int
    size_step: int = 1

    def __post_init__(self):
        if not self.name:
            raise SpaceError("group needs a name")
        if self.max_layers < 1:
            raise SpaceError(f"group {self.name!r} needs max_layers >= 1")
        if self.size_step < 1:
            raise SpaceError(f"group {self.name!r} needs size_step >= 1")
        if self.size_low < 0:
            raise SpaceError(f"group {self.name!r} needs size_low >= 0")
        if not self.size_low < self.size_high:
            raise SpaceError(f"group {self.name!r} needs size_low < size_high")
        if self.size_low % self.size_step or self.size_high % self.size_step:
            raise SpaceError(
                f"group {self.name!r}: size bounds must be multiples of size_step")

    @property
    def scaled_low(self) -> int:
        return self.size_low // self.size_step

    @property
    def scaled_high(self) -> int:
        return self.size_high // self.size_step


@dataclass(frozen=True)
class HpoSpace:
    """Ordered parameters and layered groups with a chosen group encoding."""

    params: tuple = ()
    groups: tuple = ()
    encoding: str = "count_variable"

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.encoding not in ENCODINGS:
            raise SpaceError(f"unknown encoding {self.encoding!r}; "
                             f"choose from {ENCODINGS}")
        if not self.params and not self.groups:
            raise SpaceError("space must declare at least one parameter or group")
        names = [p.name for p in self.params] + [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate names in space: {sorted(names)}")

    @property
    def n(self) -> int:
        per_group = (lambda g: g.max_layers + 1) \
            if self.encoding == "count_variable" else (lambda g: g.max_layers)
        return len(self.params) + sum(per_group(g) for g in self.groups)

    def dimension_names(self) -> list[str]:
        """One label per encoded dimension, in declaration order."""
        names = [p.name for p in self.params]
        for g in self.groups:
            names.extend(f"{g.name}[{i}]" for i in range(g.max_layers))
            if self.encoding == "count_variable":
                names.append(f"{g.name}#count")
        return names

    def _group_offsets(self) -> list[int]:
        """Index of each group's first size dimension."""
        offsets = []
        pos = len(self.params)
        step = (lambda g: g.max_layers + 1) \
            if self.encoding == "count_variable" else (lambda g: g.max_layers)
        for g in self.groups:
            offsets.append(pos)
            pos += step(g)
        return offsets


def to_domain(space: HpoSpace) -> BoxDomain:
    """Encode the space as a box: one dimension per scalar decision variable,
    integer dimensions registered for integer, categorical, size and count
    variables."""
    lower, upper, integer_dims = [], [], []
    for p in space.params:
        lo, hi = p.bounds()
        if p.is_integer_dim:
            integer_dims.append(len(lower))
        lower.append(lo)
        upper.append(hi)
    for g in space.groups:
        size_lo = g.scaled_low if space.encoding == "count_variable" else 0
        for _ in range(g.max_layers):
            integer_dims.append(len(lower))
            lower.append(float(size_lo))
            upper.append(float(g.scaled_high))
        if space.encoding == "count_variable":
            integer_dims.append(len(lower))
            lower.append(0.0)
            upper.append(float(g.max_layers))
    return BoxDomain(lower, upper, integer_dims)


def decode(space: HpoSpace, x) -> dict:
    """Map a box point to named hyperparameter values.

    Scalars map directly; log10 dimensions exponentiate; categoricals index
    their label list.  Each group decodes to a list of layer sizes: under
    count_variable the first ``count`` sizes (zeros skipped), under naive
    every nonzero size in order.  The input is snapped to the integer
    lattice first, so any in-box point is decodable.
    """
    d = to_domain(space)
    x = snap_integers(np.asarray(x, dtype=float), d)
    out = {}
    pos = 0
    for p in space.params:
        v = x[pos]
        if p.kind == "continuous":
            out[p.name] = float(v)
        elif p.kind == "log10_continuous":
            out[p.name] = float(10.0 ** v)
        elif p.kind == "integer":
            out[p.name] = int(v)
        else:
            out[p.name] = p.categories[int(v)]
        pos += 1
    for g in space.groups:
        sizes = x[pos:pos + g.max_layers]
        pos += g.max_layers
        if space.encoding == "count_variable":
            count = int(x[pos])
            pos += 1
            sizes = sizes[:count]
        out[g.name] = [int(s) * g.size_step for s in sizes if s > 0]
    return out


def expected_decoded_cost(space: HpoSpace, samples: int,
                          rng: RngStream | np.random.Generator | int = 0) -> float:
    """Monte Carlo mean of the total decoded layer size under uniform box
    sampling, a proxy for the training cost of a sampled architecture."""
    if not space.groups:
        raise SpaceError("expected_decoded_cost needs at least one group")
    if samples < 1:
        raise SpaceError("samples must be >= 1")
    if isinstance(rng, RngStream):
        gen = rng.generator()
    elif isinstance(rng, np.random.Generator):
        gen = rng
    else:
        gen = RngStream(int(rng), "decoded-cost").generator()

    d = to_domain(space)
    draws = gen.uniform(d.lower, d.upper, size=(samples, d.n))
    snapped = np.sign(draws) * np.floor(np.abs(draws) + 0.5)  # all dims integer here
    total = np.zeros(samples)
    for g, off in zip(space.groups, space._group_offsets()):
        sizes = snapped[:, off:off + g.max_layers]
        if space.encoding == "count_variable":
            counts = snapped[:, off + g.max_layers]
            keep = np.arange(g.max_layers) < counts[:, None]
            sizes = np.where(keep, sizes, 0.0)
        total += sizes.sum(axis=1) * g.size_step
    return float(np.mean(total))
