"""Shared numerical kernels: symmetric eigendecomposition with a fixed
sign convention, Moore-Penrose pseudo-inverse, Kron reduction of
Laplacians, and the sparsemax simplex projection.

All functions are pure and operate on dense float64 arrays; the graphs
this library targets stay well below the size where iterative solvers
pay off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

_SIGN_TOL = 1e-12


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues in ascending order with unit-norm column eigenvectors.

    The sign of each vector is fixed so that its first component larger
    than 1e-12 in magnitude is positive, making downstream selections
    that depend on eigenvector signs deterministic.
    """

    values: np.ndarray
    vectors: np.ndarray


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    tol = 1e-10 * max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > tol:
        raise ValueError("matrix is not symmetric")
    return m


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the first non-negligible entry is positive."""
    v = np.array(vectors, copy=True)
    for k in range(v.shape[1]):
        col = v[:, k]
        big = np.nonzero(np.abs(col) > _SIGN_TOL)[0]
        if big.size and col[big[0]] < 0:
            v[:, k] = -col
    return v


def eigh_range(m: np.ndarray, smallest: int | None = None, largest: int | None = None) -> EigenPairs:
    """Eigenpairs of a symmetric matrix, either the smallest k or the largest k.

    Exactly one of ``smallest``/``largest`` must be given. Values are
    returned ascending in both cases.
    """
    m = _check_symmetric(m)
    if (smallest is None) == (largest is None):
        raise ValueError("pass exactly one of smallest= or largest=")
    k = smallest if smallest is not None else largest
    if not 1 <= k <= m.shape[0]:
        raise ValueError("requested count out of range")
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    sl = slice(0, k) if smallest is not None else slice(m.shape[0] - k, m.shape[0])
    return EigenPairs(vals[sl], fix_signs(vecs[:, sl]))


def pseudo_inverse(s: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse; singular values below 1e-10 of the
    largest are truncated."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        return np.zeros(s.shape[::-1])
    return np.linalg.pinv(s, rcond=1e-10)


def kron_reduction(lap: np.ndarray, keep) -> np.ndarray:
    """Schur complement of a combinatorial Laplacian onto the kept nodes.

    L' = L[keep,keep] - L[keep,drop] @ pinv(L[drop,drop]) @ L[drop,keep].
    The pseudo-inverse handles dropped blocks that are singular (e.g.
    dropped nodes forming their own components). The result is again a
    valid Laplacian on the kept nodes and preserves effective
    resistances among them.
    """
    lap = _check_symmetric(lap)
    keep = np.asarray(sorted(set(int(i) for i in np.asarray(keep).ravel())), dtype=np.int64)
    if keep.size == 0:
        raise ValueError("keep set must be non-empty")
    if keep.min() < 0 or keep.max() >= lap.shape[0]:
        raise ValueError("keep index out of range")
    drop = np.setdiff1d(np.arange(lap.shape[0]), keep)
    if drop.size == 0:
        return lap.copy()
    l_kk = lap[np.ix_(keep, keep)]
    l_kd = lap[np.ix_(keep, drop)]
    l_dd = lap[np.ix_(drop, drop)]
    red = l_kk - l_kd @ pseudo_inverse(l_dd) @ l_kd.T
    return 0.5 * (red + red.T)


def sparsemax(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    The result sums to one and is typically sparse: entries far below
    the largest are set exactly to zero.
    """
    v = np.asarray(v, dtype=np.float64).reshape(1, -1)
    if not np.all(np.isfinite(v)):
        raise ValueError("sparsemax input must be finite")
    return kernels.project_rows_to_simplex(np.ascontiguousarray(v))[0]


def sparsemax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise sparsemax of a 2-D array."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("sparsemax input must be finite")
    return kernels.project_rows_to_simplex(m)
