"""Next-point selection: cyclically weighted surrogate merit vs distance.

Each proposal maximizes score(y) = w * Vs(y) + (1-w) * Vd(y) over the box,
where Vs is the batch-normalized surrogate merit (low predicted value is
good) and Vd the batch-normalized minimum scaled distance to the node set.
The weight w cycles from exploitation toward exploration.  The auxiliary
maximization is done by a small genetic algorithm; the winning point must
clear a minimum-distance filter before it is accepted for evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .core import (BoxDomain, ContractError, NodeSet, RngStream,
                   snap_integers, unscale)
from .surrogate import RbfModel, predict_batch

DEFAULT_WEIGHTS = (0.95, 0.75, 0.50, 0.25, 0.05)

REJECT_TOO_CLOSE = "too_close"
REJECT_DEGENERATE = "degenerate"

MAX_FALLBACK_DRAWS = 1000


class ProposerError(RuntimeError):
    """Raised when no acceptable point exists (domain effectively saturated)."""


def min_separation(n: int) -> float:
    """Acceptance filter radius in scaled space."""
    return 1e-3 * math.sqrt(n)


@dataclass
class WeightCycle:
    """Periodic schedule of the surrogate-merit weight."""

    weights: tuple = DEFAULT_WEIGHTS
    position: int = 0

    def __post_init__(self):
        self.weights = tuple(float(w) for w in self.weights)
        if not self.weights or any(w < 0 or w > 1 for w in self.weights):
            raise ContractError("weights must be a nonempty sequence in [0,1]")

    def next_weight(self) -> float:
        w = self.weights[self.position % len(self.weights)]
        self.position = (self.position + 1) % len(self.weights)
        return w


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    generations: int = 20
    mutation_rate: float = 0.1
    elite_fraction: float = 0.25
    mutation_sigma: float = 0.1

    def __post_init__(self):
        if self.population_size < 4:
            raise ContractError("population_size must be >= 4")
        if not 0 < self.mutation_rate < 1:
            raise ContractError("mutation_rate must be in (0,1)")

    @classmethod
    def for_dimension(cls, n: int, **overrides) -> "GaConfig":
        kw = dict(population_size=max(50, min(400, 20 * n)))
        kw.update(overrides)
        return cls(**kw)

    @property
    def elite_count(self) -> int:
        return max(1, int(self.population_size * self.elite_fraction))


@dataclass(frozen=True)
class Proposal:
    point: np.ndarray  # raw coordinates, integers snapped
    weight_used: float
    accepted: bool
    rejection_reason: Optional[str] = None
    source: str = "ga"  # ga | retry | fallback


def _node_points(nodes) -> np.ndarray:
    """Scaled node coordinates; plain arrays are taken to be scaled already."""
    return nodes.points() if isinstance(nodes, NodeSet) else np.atleast_2d(np.asarray(nodes, float))


def _min_dist_scaled(u: np.ndarray, nodes) -> float:
    return float(np.min(np.linalg.norm(_node_points(nodes) - u, axis=1)))


def _normalize(raw: np.ndarray, flip: bool) -> np.ndarray:
    lo, hi = float(np.min(raw)), float(np.max(raw))
    if hi - lo <= 0:
        return np.full(raw.shape, 0.5)
    v = (raw - lo) / (hi - lo)
    return 1.0 - v if flip else v


def _raw_merit(model: RbfModel, node_pts: np.ndarray, cand: np.ndarray):
    """Per-candidate surrogate value and min scaled distance, unnormalized."""
    s = predict_batch(model, cand)
    dmin = cdist(cand, node_pts).min(axis=1)
    return s, dmin


def _blend(s: np.ndarray, dmin: np.ndarray, w: float) -> np.ndarray:
    vs = _normalize(s, flip=True)   # low predicted value -> merit 1
    vd = _normalize(dmin, flip=False)
    return w * vs + (1.0 - w) * vd


def score(model: RbfModel, nodes, candidates: np.ndarray, w: float) -> np.ndarray:
    """Blended merit of each scaled candidate; larger is better.

    Surrogate values and min distances are normalized across the candidate
    batch; a zero-range term contributes a constant 0.5.
    """
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    if cand.shape[0] == 0:
        raise ContractError("candidate batch must be nonempty")
    s, dmin = _raw_merit(model, _node_points(nodes), cand)
    return _blend(s, dmin, w)


def _snap_rows(unit_pop: np.ndarray, d: BoxDomain) -> np.ndarray:
    """Scaled population -> scaled population with integer dims snapped in
    raw space (states the evaluation-time geometry of integer variables)."""
    if not d.integer_dims:
        return unit_pop
    raw = d.lower + unit_pop * d.span
    for i in d.integer_dims:
        col = np.sign(raw[:, i]) * np.floor(np.abs(raw[:, i]) + 0.5)
        raw[:, i] = np.clip(col, d.lower[i], d.upper[i])
    return (raw - d.lower) / d.span


def ga_argmax(model: RbfModel, nodes, d: BoxDomain, w: float,
              cfg: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """Maximize the blended score over the unit box with a simple GA.

    Uniform initialization, truncation selection of the top elite fraction,
    uniform crossover of two distinct elite parents, per-gene Gaussian
    mutation clipped to [0,1].  Returns the best scaled point (snapped
    geometry), ties broken by lowest population index.
    """
    n = d.n
    node_pts = _node_points(nodes)
    pop = rng.uniform(size=(cfg.population_size, n))
    e = cfg.elite_count
    m = cfg.population_size - e
    # raw merits are per-row quantities, so surviving elite rows keep theirs
    # and only fresh children are evaluated against the model
    s, dmin = _raw_merit(model, node_pts, _snap_rows(pop, d))
    for _ in range(cfg.generations):
        fitness = _blend(s, dmin, w)
        order = np.argsort(-fitness, kind="stable")
        elite = pop[order[:e]]
        es, ed = s[order[:e]], dmin[order[:e]]
        if m > 0:
            pi = rng.integers(e, size=m)
            if e > 1:
                pj = (pi + 1 + rng.integers(e - 1, size=m)) % e
            else:
                pj = pi
            mask = rng.uniform(size=(m, n)) < 0.5
            children = np.where(mask, elite[pi], elite[pj])
            mut = rng.uniform(size=(m, n)) < cfg.mutation_rate
            children = children + mut * rng.normal(0.0, cfg.mutation_sigma, size=(m, n))
            np.clip(children, 0.0, 1.0, out=children)
            cs, cd = _raw_merit(model, node_pts, _snap_rows(children, d))
            pop = np.vstack([elite, children])
            s = np.concatenate([es, cs])
            dmin = np.concatenate([ed, cd])
        else:
            pop, s, dmin = elite, es, ed
    fitness = _blend(s, dmin, w)
    return _snap_rows(pop, d)[int(np.argmax(fitness))]


def propose_with_weight(model: RbfModel, nodes, d: BoxDomain, w: float,
                        cfg: GaConfig, rng: np.random.Generator) -> Proposal:
    """One proposal at a fixed weight, with the retry ladder.

    GA winner too close to a node -> retry once at w=0 (pure distance) ->
    uniform random fallback (at most 1000 draws).  Raises ProposerError when
    even random points cannot clear the filter.
    """
    dmin = min_separation(d.n)
    for source, weight in (("ga", w), ("retry", 0.0)):
        cand = ga_argmax(model, nodes, d, weight, cfg, rng)
        raw = snap_integers(unscale(cand, d), d)
        if _min_dist_scaled((raw - d.lower) / d.span, nodes) >= dmin:
            return Proposal(point=raw, weight_used=w, accepted=True, source=source)
    for _ in range(MAX_FALLBACK_DRAWS):
        raw = snap_integers(rng.uniform(d.lower, d.upper), d)
        if _min_dist_scaled((raw - d.lower) / d.span, nodes) >= dmin:
            return Proposal(point=raw, weight_used=w, accepted=True, source="fallback")
    raise ProposerError(
        f"no point clears the distance filter {dmin:.2e} after "
        f"{MAX_FALLBACK_DRAWS} random draws; domain appears saturated"
    )


def propose(model: RbfModel, nodes, d: BoxDomain, cycle: WeightCycle,
            cfg: GaConfig, rng: RngStream | np.random.Generator) -> Proposal:
    """Advance the weight cycle and produce the next accepted proposal."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return propose_with_weight(model, nodes, d, cycle.next_weight(), cfg, gen)
