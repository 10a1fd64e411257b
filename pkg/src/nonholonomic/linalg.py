"""Small dense linear-algebra helpers shared by the solver modules."""

import numpy as np

#: relative singular-value threshold for every rank decision
RANK_RTOL = 1e-9


def singular_values(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def numerical_rank(A, rtol=RANK_RTOL):
    sv = singular_values(A)
    if sv.size == 0 or sv[0] == 0 or not np.isfinite(sv[0]):
        return 0
    return int(np.count_nonzero(sv > rtol * sv[0]))


def rcond(A):
    """Ratio of smallest to largest singular value (1.0 for an empty matrix)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 1.0
    sv = singular_values(A)
    if sv[0] == 0 or not np.isfinite(sv[0]):
        return 0.0
    return float(sv[min(A.shape) - 1] / sv[0])


def row_space(A, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) of the row space of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, A.shape[1] if A.ndim == 2 else 0))
    _, sv, vt = np.linalg.svd(A)
    k = numerical_rank(A, rtol)
    return vt[:k]


def null_space(A, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) of ``{x : A x = 0}``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    ncols = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(ncols)
    _, _, vt = np.linalg.svd(A)
    k = numerical_rank(A, rtol)
    return vt[k:]
