"""Histogram densities on the unit cube.

A histogram with b bins per dimension in d dimensions is determined by its
bin-weight probability tensor w of shape (b,..,b): the density value on bin
A is b**d * w[A], so the density integrates to one exactly.  Bins are the
half-open cubes [i/b, (i+1)/b) with the top edge closed by clamping, so no
mass is dropped when a coordinate equals 1.0.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor import validate_prob_tensor


@dataclass(frozen=True)
class HistogramDensity:
    d: int
    b: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = validate_prob_tensor(self.weights, name="weights")
        if w.shape != (self.b,) * self.d:
            raise ValueError(
                f"weights shape {w.shape} != {(self.b,) * self.d}"
            )
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n_bins(self):
        return self.b**self.d


def validate_sample(X, d=None):
    """Check an (n, d) matrix of unit-cube points; returns the array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("sample must be a non-empty (n, d) matrix")
    if d is not None and X.shape[1] != d:
        raise ValueError(f"sample has {X.shape[1]} columns, expected {d}")
    if not np.all(np.isfinite(X)):
        raise ValueError("sample contains non-finite values")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("sample coordinates must lie in [0, 1]")
    return X


def bin_index(x, b):
    """0-based bin multi-index of a point; coordinate 1.0 falls in bin b-1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("coordinates must lie in [0, 1]")
    idx = np.minimum(np.floor(x * b).astype(np.int64), b - 1)
    return tuple(int(i) for i in idx)


def bin_indices_flat(X, b, d):
    """Row-major flat bin index for every row of a sample matrix."""
    X = validate_sample(X, d)
    idx = np.minimum(np.floor(X * b).astype(np.int64), b - 1)
    return np.ravel_multi_index(tuple(idx.T), (b,) * d)


def histogram_from_data(X, b):
    """Standard histogram estimator: bin weight = fraction of points in bin."""
    X = validate_sample(X)
    n, d = X.shape
    flat = bin_indices_flat(X, b, d)
    counts = np.bincount(flat, minlength=b**d).astype(float)
    return HistogramDensity(d, b, (counts / n).reshape((b,) * d))


def evaluate(h, x):
    """Density value at a point: b**d times the weight of the point's bin."""
    return float(h.b**h.d * h.weights[bin_index(x, h.b)])


def evaluate_at(h, X):
    """Vectorized density values at every row of a sample matrix."""
    flat = bin_indices_flat(X, h.b, h.d)
    return h.b**h.d * h.weights.ravel()[flat]


def u_inverse(h):
    """Bin-weight probability tensor of a histogram."""
    return h.weights


def u_map(t, b=None, d=None):
    """Histogram with the given bin-weight tensor (inverse of u_inverse)."""
    t = np.asarray(t, dtype=float)
    if d is not None and t.ndim != d:
        raise ValueError(f"tensor order {t.ndim} != d={d}")
    if b is not None and any(e != b for e in t.shape):
        raise ValueError(f"tensor shape {t.shape} != b={b} per mode")
    if len(set(t.shape)) != 1:
        raise ValueError("histogram weight tensor must be cubic")
    return HistogramDensity(t.ndim, t.shape[0], t)


def _check_same_grid(h1, h2):
    if (h1.b, h1.d) != (h2.b, h2.d):
        raise ValueError(
            f"histograms on different grids: (b={h1.b}, d={h1.d}) vs (b={h2.b}, d={h2.d})"
        )


def l1_distance(h1, h2):
    """L1 distance between two histogram densities on a common grid.

    Equals the entrywise 1-norm of the weight-tensor difference: the map
    from weight tensors to densities is an l1 -> L1 isometry.
    """
    _check_same_grid(h1, h2)
    return float(np.abs(h1.weights - h2.weights).sum())


def l2_inner(h1, h2):
    """L2 inner product of two histogram densities (exact for step functions)."""
    _check_same_grid(h1, h2)
    return float(h1.b**h1.d * np.dot(h1.weights.ravel(), h2.weights.ravel()))


def empirical_l2_risk(h, X_test):
    """<h,h> - (2/n) * sum_i h(X_i): the sample surrogate for squared L2 loss.

    Up to a constant that does not depend on h, this estimates the squared
    L2 distance between h and the density that generated X_test; lower is
    better and negative values are normal.
    """
    X_test = validate_sample(X_test, h.d)
    vals = evaluate_at(h, X_test)
    return l2_inner(h, h) - 2.0 * float(vals.mean())


def sample_histogram(h, n, seed):
    """Draw n points: pick a bin by weight, then uniform inside the bin."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    w = h.weights.ravel()
    flat = rng.choice(w.size, size=n, p=w / w.sum())
    idx = np.column_stack(np.unravel_index(flat, h.weights.shape))
    return (idx + rng.random((n, h.d))) / h.b


def refine(h, factor):
    """Same density on a grid with factor-times more bins per dimension."""
    if factor < 1 or int(factor) != factor:
        raise ValueError("factor must be a positive integer")
    factor = int(factor)
    w = h.weights
    for axis in range(h.d):
        w = np.repeat(w, factor, axis=axis)
    return HistogramDensity(h.d, h.b * factor, w / factor**h.d)
