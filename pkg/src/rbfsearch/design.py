"""Initial experimental design: randomized Latin hypercube with a rank guard.

The degree-1 surrogate tail needs a poised node set, i.e. the k x (n+1)
matrix whose rows are (point, 1) must have full column rank.  Random Latin
hypercube designs almost surely satisfy this on continuous domains, but
integer snapping can collapse strata, so the rank (and pairwise
distinctness, which the interpolation system also needs) is checked and the
design regenerated when it fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoxDomain, RngStream, snap_integers, unscale

RANK_TOL = 1e-10
MAX_ATTEMPTS = 100
MAX_PERTURB = 100


class DesignError(RuntimeError):
    """Raised when no poised design can be produced for the domain."""


@dataclass
class InitialDesign:
    points: list[np.ndarray]  # raw coordinates, integers snapped
    rank_ok: bool


def affine_rank_ok(points: np.ndarray, tol: float = RANK_TOL) -> bool:
    """Check that rows (point_i, 1) span n+1 dimensions.

    The smallest singular value relative to the largest must exceed ``tol``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k, n = pts.shape
    if k < n + 1:
        return False
    mat = np.hstack([pts, np.ones((k, 1))])
    sv = np.linalg.svd(mat, compute_uv=False)
    return bool(sv[-1] > tol * sv[0])


def _pairwise_distinct(points: np.ndarray) -> bool:
    k = points.shape[0]
    for i in range(k):
        if np.any(np.all(points[i + 1:] == points[i], axis=1)):
            return False
    return True


def _lhs_unit(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k stratified samples per dimension: a random permutation of the k
    equal-width strata of [0,1), uniform inside each stratum."""
    u = np.empty((k, n))
    for j in range(n):
        perm = rng.permutation(k)
        u[:, j] = (perm + rng.uniform(size=k)) / k
    return u


def latin_hypercube(d: BoxDomain, k: int | None = None,
                    rng: RngStream | np.random.Generator | None = None) -> InitialDesign:
    """Generate k >= n+1 Latin hypercube points in the box, integers snapped.

    Regenerates from fresh draws up to 100 times if the snapped design is
    rank deficient or contains duplicate points, then falls back to
    re-drawing only the offending rows' stratum offsets.
    """
    n = d.n
    if k is None:
        k = n + 1
    if k < n + 1:
        raise DesignError(f"design size k={k} below n+1={n + 1}")
    if rng is None:
        rng = RngStream(0, "design")
    gen = rng.generator() if isinstance(rng, RngStream) else rng

    snapped = None
    for _ in range(MAX_ATTEMPTS):
        unit = _lhs_unit(n, k, gen)
        snapped = np.vstack([snap_integers(unscale(u, d), d) for u in unit])
        if _pairwise_distinct(snapped) and affine_rank_ok(snapped):
            return InitialDesign(points=list(snapped), rank_ok=True)

    # Targeted perturbation: resample the stratum assignment of rows that
    # duplicate an earlier row, keeping the marginal stratification intact.
    unit = _lhs_unit(n, k, gen)
    for _ in range(MAX_PERTURB):
        snapped = np.vstack([snap_integers(unscale(u, d), d) for u in unit])
        if _pairwise_distinct(snapped) and affine_rank_ok(snapped):
            return InitialDesign(points=list(snapped), rank_ok=True)
        bad = set()
        for i in range(k):
            for j in range(i + 1, k):
                if np.all(snapped[i] == snapped[j]):
                    bad.add(j)
        if not bad:
            bad = {int(gen.integers(k))}
        for j in sorted(bad):
            # swap this row's strata with a random partner row, then re-draw
            # both rows' intra-stratum offsets
            p = int(gen.integers(k))
            for dim in range(n):
                si, sp = int(unit[j, dim] * k), int(unit[p, dim] * k)
                unit[j, dim] = (sp + gen.uniform()) / k
                unit[p, dim] = (si + gen.uniform()) / k

    raise DesignError(
        f"could not build a poised {k}-point design in {n} dims "
        f"(integer dims {sorted(d.integer_dims)}); last design:\n{snapped}"
    )
