from __future__ import annotations

import numpy as np

from .. import _accel
from ..errors import DegenerateInputError, InputError

PCA_TOL = 1e-8
PCA_MAX_ITER = 10_000


def principal_direction(
    diffs: np.ndarray,
    center: bool = False,
    tol: float = PCA_TOL,
    max_iter: int = PCA_MAX_ITER,
    seed: int = 0,
) -> np.ndarray:
    """First principal direction of the rows of ``diffs`` by power iteration.

    Rows are used uncentered unless ``center`` is set. Power iteration runs
    on whichever Gram matrix (``D D^T`` or ``D^T D``) is smaller, from a
    seeded random start. The result has unit norm and is oriented so that
    its dot product with the row mean is non-negative.

    Raises:
        DegenerateInputError: every row is zero (after centering).
    """
    d = np.asarray(diffs, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 1:
        raise InputError("diffs must be a non-empty 2-D matrix")
    if not np.isfinite(d).all():
        raise InputError("diffs contains non-finite entries")
    mean = d.mean(axis=0)
    if center:
        d = d - mean
    if not d.any():
        raise DegenerateInputError("difference matrix is all zeros")
    n, dim = d.shape
    rng = np.random.default_rng(seed)
    if n <= dim:
        u, _ = _accel.power_iteration(d @ d.T, rng.standard_normal(n), tol, max_iter)
        v = d.T @ u
    else:
        v, _ = _accel.power_iteration(d.T @ d, rng.standard_normal(dim), tol, max_iter)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegenerateInputError("power iteration collapsed to the zero vector")
    v = v / norm
    if v @ mean < 0:
        v = -v
    return v


def mean_direction(diffs: np.ndarray) -> np.ndarray:
    """Unit-normalized row mean; the fallback when PCA is degenerate."""
    mean = np.asarray(diffs, dtype=np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateInputError("mean difference is zero")
    return mean / norm
