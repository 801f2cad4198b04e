"""Radial basis function interpolant with a degree-1 polynomial tail.

The model is s(x) = sum_i lambda_i phi(||x - c_i||) + a.x + b, fitted by
solving the symmetric saddle system

    [ Phi  P ] [ lambda ]   [ values ]
    [ P^T  0 ] [   c    ] = [   0    ]

where Phi_ij = phi(||c_i - c_j||) and P has rows (c_i, 1).  The side
condition P^T lambda = 0 makes the interpolant reproduce affine functions
exactly.  All centers live in the scaled unit hypercube.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve
from scipy.spatial.distance import cdist

from .core import ContractError
from .design import affine_rank_ok

KERNELS = ("thin_plate_spline", "cubic", "linear", "multiquadric", "gaussian")
DEFAULT_KERNEL = "thin_plate_spline"

COND_LIMIT = 1e10
REG_START = 1e-10
REG_CEILING = 1e-6


class FitError(RuntimeError):
    """Raised when the interpolation system cannot be solved reliably."""


def cap_values(values: np.ndarray, quantile: Optional[float] = 0.35) -> np.ndarray:
    """Cap values above the given quantile before fitting.

    Objectives like Goldstein-Price span many orders of magnitude inside the
    box; interpolating the raw values lets a few huge ones dominate and
    flattens out all detail near the minimum.  Capping keeps the low region
    exact while leveling the uninteresting high region.  The 0.35 default
    was tuned on the classic global-optimization test set; pass None to fit
    the raw values.
    """
    values = np.asarray(values, dtype=float)
    if quantile is None:
        return values
    if not 0.0 < quantile <= 1.0:
        raise ContractError(f"cap quantile must be in (0, 1], got {quantile!r}")
    return np.minimum(values, np.quantile(values, quantile))


def kernel_value(kernel: str, r):
    """Evaluate the radial kernel at distance(s) r >= 0.

    thin_plate_spline: r^2 ln r (0 at r=0); cubic: r^3; linear: r;
    multiquadric: sqrt(r^2 + 1); gaussian: exp(-r^2).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ContractError("kernel radius must be nonnegative")
    if kernel == "thin_plate_spline":
        safe = np.where(r > 0, r, 1.0)
        out = np.where(r > 0, r * r * np.log(safe), 0.0)
    elif kernel == "cubic":
        out = r ** 3
    elif kernel == "linear":
        out = r
    elif kernel == "multiquadric":
        out = np.sqrt(r * r + 1.0)
    elif kernel == "gaussian":
        out = np.exp(-(r * r))
    else:
        raise ContractError(f"unknown kernel {kernel!r}; choose from {KERNELS}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RbfModel:
    kernel: str
    centers: np.ndarray        # k x n scaled points
    radial_coeffs: np.ndarray  # lambda, length k
    poly_coeffs: np.ndarray    # (a_1..a_n, b), length n+1
    regularization_used: float = 0.0

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def _assemble(points: np.ndarray, kernel: str):
    k, n = points.shape
    phi = kernel_value(kernel, cdist(points, points))
    p = np.hstack([points, np.ones((k, 1))])
    a = np.zeros((k + n + 1, k + n + 1))
    a[:k, :k] = phi
    a[:k, k:] = p
    a[k:, :k] = p.T
    return a


def _solve_with_cond(a: np.ndarray, rhs: np.ndarray):
    """LU solve plus a 1-norm condition estimate (LAPACK gecon)."""
    anorm = np.linalg.norm(a, 1)
    try:
        lu, piv = lu_factor(a)
    except np.linalg.LinAlgError:
        return None, np.inf
    gecon = get_lapack_funcs("gecon", (a,))
    rcond, info = gecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond <= 0:
        return None, np.inf
    sol = lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(sol)):
        return None, np.inf
    return sol, 1.0 / rcond


def fit(points: np.ndarray, values: np.ndarray,
        kernel: str = DEFAULT_KERNEL) -> RbfModel:
    """Fit the interpolant through (points, values).

    Points are scaled coordinates, pairwise distinct, k >= n+1, and poised
    for degree 1.  If the saddle system is ill conditioned (estimate above
    1e10) the Phi block is regularized with an escalating Tikhonov term,
    recorded on the returned model.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    k, n = points.shape
    if values.shape != (k,):
        raise ContractError(f"got {k} points but {values.shape} values")
    if k < n + 1:
        raise FitError(f"need at least n+1={n + 1} nodes, got {k}")
    dists = cdist(points, points)
    np.fill_diagonal(dists, np.inf)
    if np.min(dists) == 0.0:
        raise FitError("duplicate interpolation points")
    if not affine_rank_ok(points):
        raise FitError("node set is not poised for a degree-1 tail")

    rhs = np.concatenate([values, np.zeros(n + 1)])
    a = _assemble(points, kernel)
    sol, cond = _solve_with_cond(a, rhs)
    reg = 0.0
    if sol is None or cond > COND_LIMIT:
        eps = REG_START
        while eps <= REG_CEILING:
            a_reg = a.copy()
            a_reg[:k, :k] += eps * np.eye(k)
            sol, cond = _solve_with_cond(a_reg, rhs)
            if sol is not None and cond <= COND_LIMIT:
                reg = eps
                break
            eps *= 2.0
        else:
            raise FitError(
                f"system remains ill conditioned (estimate {cond:.2e}) at "
                f"regularization ceiling {REG_CEILING:g}"
            )

    return RbfModel(
        kernel=kernel,
        centers=points.copy(),
        radial_coeffs=sol[:k].copy(),
        poly_coeffs=sol[k:].copy(),
        regularization_used=reg,
    )


def predict(model: RbfModel, x) -> float:
    """Surrogate value at one scaled point."""
    return float(predict_batch(model, np.asarray(x, dtype=float)[None, :])[0])


def predict_batch(model: RbfModel, xs: np.ndarray) -> np.ndarray:
    """Surrogate values at an m x n array of scaled points."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    phi = kernel_value(model.kernel, cdist(xs, model.centers))
    tail = xs @ model.poly_coeffs[:-1] + model.poly_coeffs[-1]
    return phi @ model.radial_coeffs + tail
