"""Independent reference implementations used to check the library.

Everything here recomputes results from definitions (exhaustive
enumeration, pointwise evaluation) without reusing the code paths under
test.
"""

import itertools

import numpy as np
from scipy import stats as sps


def simplex_projection_bruteforce(v, radius=1.0):
    """Enumerate every support set of the KKT system and keep the feasible
    candidate closest to v.  The true projection has the form
    w_i = v_i - theta on its support and 0 elsewhere, so it appears among
    the candidates."""
    m = v.shape[0]
    best = None
    best_dist = np.inf
    for size in range(1, m + 1):
        for support in itertools.combinations(range(m), size):
            s = list(support)
            theta = (v[s].sum() - radius) / size
            w = np.zeros(m)
            w[s] = v[s] - theta
            if w[s].min() < -1e-12:
                continue
            dist = float(((w - v) ** 2).sum())
            if dist < best_dist:
                best_dist = dist
                best = w
    return best


def wilcoxon_pvalue_by_enumeration(diff):
    """Two-sided p over all 2^n sign assignments of the ranked |differences|."""
    diff = diff[diff != 0]
    ranks = sps.rankdata(np.abs(diff))
    w_obs = float((np.sign(diff) * ranks).sum())
    count = 0
    for signs in itertools.product((-1.0, 1.0), repeat=len(ranks)):
        if abs(float(np.dot(signs, ranks))) >= abs(w_obs) - 1e-9:
            count += 1
    return count / 2 ** len(ranks)


def perturbed_histogram(h, delta, rng):
    """Move `delta` total mass from the heaviest bins to the lightest."""
    from lrhist.histogram import HistogramDensity

    w = h.weights.ravel().copy()
    order = np.argsort(w)
    take = delta / 2
    for i in order[::-1]:
        amount = min(take, w[i])
        w[i] -= amount
        take -= amount
        if take <= 1e-15:
            break
    w[order[0]] += delta / 2 - take
    w = np.maximum(w, 0)
    w /= w.sum()
    return HistogramDensity(h.d, h.b, w.reshape(h.weights.shape))
