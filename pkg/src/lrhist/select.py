"""Minimum-distance selection among candidate histogram densities.

Given candidates p_1..p_M on a shared grid and a sample, each ordered pair
(i, j) defines the bin set where p_i exceeds p_j.  A candidate's score is
the worst-case gap between its own probability of such a set and the
empirical mass of that set; the selected density minimizes this score.
"""

from dataclasses import dataclass

import numpy as np

from .histogram import bin_indices_flat


@dataclass(frozen=True)
class SelectionResult:
    index: int
    deltas: np.ndarray


def scheffe_set(p_i, p_j):
    """Boolean bin mask where p_i's density strictly exceeds p_j's."""
    if (p_i.b, p_i.d) != (p_j.b, p_j.d):
        raise ValueError("candidates must share the same grid")
    return p_i.weights > p_j.weights


def select_density(candidates, X):
    """Index of the minimum-distance candidate, with all per-candidate scores.

    Ties go to the lowest index.  With a single candidate there are no
    pairwise comparisons, so its score is undefined (NaN).
    """
    m = len(candidates)
    if m < 1:
        raise ValueError("need at least one candidate")
    first = candidates[0]
    if m == 1:
        return SelectionResult(0, np.array([np.nan]))
    W = np.stack([c.weights.ravel() for c in candidates])
    if any((c.b, c.d) != (first.b, first.d) for c in candidates):
        raise ValueError("candidates must share the same grid")
    flat = bin_indices_flat(X, first.b, first.d)
    emp = np.bincount(flat, minlength=first.n_bins) / flat.shape[0]
    deltas = np.zeros(m)
    for i in range(m):
        worst = 0.0
        for j in range(m):
            if j == i:
                continue
            mask = W[i] > W[j]
            gap = abs(W[i][mask].sum() - emp[mask].sum())
            if gap > worst:
                worst = gap
        deltas[i] = worst
    return SelectionResult(int(np.argmin(deltas)), deltas)
