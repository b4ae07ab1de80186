"""Dimensionality reduction and unit-cube scaling for raw datasets."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProjectionBasis:
    """Orthonormal columns spanning the full space; reductions use a prefix."""

    vectors: np.ndarray
    seed: int


@dataclass(frozen=True)
class ScaleParams:
    mins: np.ndarray
    maxs: np.ndarray


def pca_reduce(X, d):
    """Project onto the top-d principal axes of the centered data.

    Axis signs are fixed so the largest-magnitude entry of each component
    is positive, making the output deterministic.
    """
    X = np.asarray(X, dtype=float)
    n, D = X.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if d > min(n, D):
        raise ValueError(f"d={d} exceeds min(n, D)={min(n, D)}")
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d]
    flip = np.sign(
        components[np.arange(d), np.argmax(np.abs(components), axis=1)]
    )
    components = components * flip[:, None]
    return centered @ components.T, components


def random_reduce(X, d, seed):
    """Project onto the first d vectors of a seeded random orthonormal basis.

    The basis is built by Gram-Schmidt on a Gaussian matrix column by
    column, so for a fixed seed the first d output columns are identical
    for every choice of d.
    """
    X = np.asarray(X, dtype=float)
    D = X.shape[1]
    if d > D:
        raise ValueError(f"d={d} exceeds the data dimension {D}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((D, D))
    basis = np.empty((D, D))
    for j in range(D):
        v = g[:, j]
        for _ in range(2):
            v = v - basis[:, :j] @ (basis[:, :j].T @ v)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("degenerate random basis draw")
        basis[:, j] = v / norm
    return X @ basis[:, :d], ProjectionBasis(basis, seed)


def fit_unit_cube(X):
    """Per-feature min and max used to map data into [0, 1]."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("empty data")
    return ScaleParams(X.min(axis=0), X.max(axis=0))


def apply_unit_cube(X, params):
    """(x - min) / (max - min), constant features to 0.5, clamped to [0, 1]."""
    X = np.asarray(X, dtype=float)
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - params.mins) / safe, 0.5)
    return np.clip(out, 0.0, 1.0)
