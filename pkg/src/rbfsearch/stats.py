"""Rank statistics for comparing optimizers over repeated runs.

The Friedman test consumes a runs x algorithms table of within-run ranks
(rank 1 is best, ties get the average rank) and is therefore invariant
under any monotone transformation of the raw values.  The count-better
matrix reports, for each ordered algorithm pair, in how many runs the row
algorithm was at least as good as the column algorithm; ties count for
both directions.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .core import ContractError, ObjectiveSense

# Upper 95% points of the chi-square distribution, by degrees of freedom.
CHI2_CRIT_95 = {
    1: 3.841, 2: 5.991, 3: 7.815, 4: 9.488, 5: 11.070,
    6: 12.592, 7: 14.067, 8: 15.507, 9: 16.919, 10: 18.307,
}


def average_ranks(values, sense: ObjectiveSense = ObjectiveSense.MINIMIZE) -> np.ndarray:
    """Within-run ranks of a runs x algorithms value table, 1 = best,
    average-rank tie handling."""
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if v.shape[0] < 1 or v.shape[1] < 2:
        raise ContractError(f"need >= 1 run and >= 2 algorithms, got {v.shape}")
    signed = v if sense is ObjectiveSense.MINIMIZE else -v
    return np.vstack([rankdata(row, method="average") for row in signed])


def friedman(ranks) -> tuple[float, bool]:
    """Friedman statistic of a runs x algorithms rank table and its
    significance at the 95% level.

    chi2_F = 12N/(k(k+1)) * sum_j R_j^2 - 3N(k+1), with R_j the mean rank
    of algorithm j over the N runs.  Significance compares against the
    tabulated chi-square critical value with k-1 degrees of freedom
    (tabulated up to k-1 = 10).
    """
    r = np.atleast_2d(np.asarray(ranks, dtype=float))
    n_runs, k = r.shape
    if k < 2 or n_runs < 2:
        raise ContractError(
            f"Friedman test needs >= 2 algorithms and >= 2 runs, got {r.shape}")
    expected_row_sum = k * (k + 1) / 2.0
    if not np.allclose(r.sum(axis=1), expected_row_sum, atol=1e-8):
        raise ContractError(
            "each row must be ranks 1..k with average-rank ties "
            f"(row sums must equal {expected_row_sum})")
    if k - 1 not in CHI2_CRIT_95:
        raise ContractError(f"no tabulated critical value for {k - 1} degrees of freedom")
    mean_ranks = r.mean(axis=0)
    statistic = (12.0 * n_runs / (k * (k + 1))) * np.sum(mean_ranks ** 2) \
        - 3.0 * n_runs * (k + 1)
    return float(statistic), bool(statistic > CHI2_CRIT_95[k - 1])


def friedman_from_values(values,
                         sense: ObjectiveSense = ObjectiveSense.MINIMIZE) -> tuple[float, bool]:
    """Friedman test on raw values: rank within each run, then test."""
    return friedman(average_ranks(values, sense))


def count_better_matrix(values,
                        sense: ObjectiveSense = ObjectiveSense.MINIMIZE) -> np.ndarray:
    """Entry (i, j): in how many runs algorithm i was at least as good as
    algorithm j.  Diagonal entries equal the run count."""
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if v.shape[1] < 2:
        raise ContractError(f"need >= 2 algorithms, got {v.shape}")
    signed = v if sense is ObjectiveSense.MINIMIZE else -v
    k = signed.shape[1]
    out = np.zeros((k, k), dtype=int)
    for i in range(k):
        for j in range(k):
            out[i, j] = int(np.sum(signed[:, i] <= signed[:, j]))
    return out
