"""Dense kernels: LU solves and inversion with explicit failure modes.

Matrices are plain ``numpy.ndarray`` objects. Factorization is delegated to
LAPACK (via ``scipy.linalg.lu_factor``); this module adds the shape, finiteness
and pivot checks the analytic solvers rely on.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonFiniteInput, Singular

PIVOT_FLOOR = 1e-300


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput("matrix", "entries must be finite")
    return m


def lu(a, error=Singular):
    """Partially pivoted LU factorization of a square matrix.

    Raises ``error`` (a :class:`Singular` subclass) when a pivot falls below
    ``PIVOT_FLOOR`` in magnitude.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    with warnings.catch_warnings():
        # singularity is reported through ``error`` below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu_, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if np.min(np.abs(np.diag(lu_))) < PIVOT_FLOOR:
        raise error("matrix is singular to working precision")
    return lu_, piv


def lu_solve(factor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if factor[0].shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"right-hand side has {b.shape[0]} rows, expected {factor[0].shape[0]}")
    return scipy.linalg.lu_solve(factor, b, check_finite=False)


def solve(a, b, error=Singular) -> np.ndarray:
    """Return ``x`` with ``a @ x == b``; ``b`` may be a vector or a matrix."""
    b_arr = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b_arr)):
        raise NonFiniteInput("rhs", "entries must be finite")
    x = lu_solve(lu(a, error), b_arr)
    if not np.all(np.isfinite(x)):
        raise error("solution overflowed")
    return x


def invert(a, error=Singular) -> np.ndarray:
    a = as_matrix(a)
    return solve(a, np.eye(a.shape[0]), error)


def solve_right(b, a, error=Singular) -> np.ndarray:
    """Return ``x`` with ``x @ a == b``."""
    return solve(as_matrix(a).T, as_matrix(b).T, error).T
