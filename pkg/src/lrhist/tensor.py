"""Dense tensor algebra and simplex projection.

Tensors are plain numpy arrays in C (row-major) order.  A "probability
tensor" is a nonnegative array whose entries sum to one; helpers below
validate that contract wherever other modules rely on it.
"""

import numpy as np

PROB_TOL = 1e-9


def _as_array(t):
    a = np.asarray(t, dtype=float)
    if a.size == 0:
        raise ValueError("empty tensor")
    return a


def validate_nonnegative(t, name="tensor"):
    a = _as_array(t)
    if np.min(a) < 0:
        raise ValueError(f"{name} has negative entries (min {np.min(a)})")
    return a


def validate_prob_tensor(t, tol=PROB_TOL, name="tensor"):
    """Check nonnegativity and unit total mass; returns the array."""
    a = validate_nonnegative(t, name=name)
    s = float(a.sum())
    if abs(s - 1.0) > tol:
        raise ValueError(f"{name} entries sum to {s}, expected 1 within {tol}")
    return a


def l1_norm(t):
    """Sum of absolute entries (entrywise 1-norm)."""
    return float(np.abs(_as_array(t)).sum())


def inner(a, b):
    """Euclidean inner product of two equal-shaped tensors."""
    a = _as_array(a)
    b = _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def outer_product(vectors):
    """Outer product of d vectors; entry (i_1,..,i_d) = prod_j v_j[i_j]."""
    if len(vectors) == 0:
        raise ValueError("need at least one vector")
    out = _as_array(vectors[0])
    if out.ndim != 1:
        raise ValueError("outer_product takes 1-d vectors")
    for v in vectors[1:]:
        v = _as_array(v)
        if v.ndim != 1:
            raise ValueError("outer_product takes 1-d vectors")
        out = np.multiply.outer(out, v)
    return out


def mode_n_product(t, m, n):
    """Mode-n product: contracts mode n of t against the columns of m.

    t has shape (e_0,..,e_{d-1}), m has shape (r, e_n); the result has
    extent r on mode n and the remaining modes unchanged.
    """
    t = _as_array(t)
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("m must be a matrix")
    if not 0 <= n < t.ndim:
        raise ValueError(f"mode {n} out of range for order-{t.ndim} tensor")
    if m.shape[1] != t.shape[n]:
        raise ValueError(
            f"matrix columns ({m.shape[1]}) must match mode-{n} extent ({t.shape[n]})"
        )
    return np.moveaxis(np.tensordot(m, t, axes=(1, n)), 0, n)


def tucker_reconstruct(core, factors):
    """Expand a core tensor through per-mode factor matrices.

    core: order-d array with extents (k_0,..,k_{d-1}); factors[j] has shape
    (b_j, k_j).  Equivalent to the sum over all core multi-indices of the
    outer products of the selected factor columns.
    """
    core = _as_array(core)
    if core.ndim != len(factors):
        raise ValueError(
            f"core order {core.ndim} != number of factors {len(factors)}"
        )
    out = core
    for j, f in enumerate(factors):
        out = mode_n_product(out, f, j)
    return out


def cp_reconstruct(weights, factors):
    """Weighted sum of rank-one components.

    weights has length k and factors[j] has shape (b_j, k); component i is
    the outer product of column i of every factor, scaled by weights[i].
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a vector")
    k = w.shape[0]
    mats = []
    for f in factors:
        f = np.asarray(f, dtype=float)
        if f.ndim != 2 or f.shape[1] != k:
            raise ValueError(
                f"factor shape {f.shape} incompatible with {k} components"
            )
        mats.append(f)
    d = len(mats)
    if d == 0:
        raise ValueError("need at least one factor")
    letters = "abcdefghijklmnopqr"[:d]
    spec = "z," + ",".join(f"{c}z" for c in letters) + "->" + letters
    return np.einsum(spec, w, *mats, optimize=True)


def project_simplex(v, radius=1.0):
    """Euclidean projection onto {w >= 0, sum w = radius}.

    Sort-and-threshold method; the threshold scan keeps the largest
    feasible support (the projection itself is unique either way).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("project_simplex takes a 1-d array")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries in input")
    if radius <= 0:
        raise ValueError("radius must be positive")
    return project_simplex_rows(v[None, :], radius)[0]


def project_simplex_rows(v, radius=1.0):
    """Row-wise simplex projection of a (batch, m) array."""
    v = np.asarray(v, dtype=float)
    m = v.shape[-1]
    u = np.sort(v, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1)
    j = np.arange(1, m + 1)
    feasible = u * j > css - radius
    # largest index where the threshold condition holds (always true at j=1)
    rho = m - 1 - np.argmax(feasible[..., ::-1], axis=-1)
    theta = (np.take_along_axis(css, rho[..., None], axis=-1) - radius) / (
        rho[..., None] + 1
    )
    return np.maximum(v - theta, 0.0)
