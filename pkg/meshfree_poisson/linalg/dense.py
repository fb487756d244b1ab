from __future__ import annotations

from typing import Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from meshfree_poisson.errors import CapExceededError
from meshfree_poisson.errors import SingularMatrixError

DEFAULT_ORACLE_CAP = 600
# pivots below this fraction of the matrix norm count as zero
SINGULAR_TOLERANCE = 1e-14

MatrixLike = Union[np.ndarray, sp.spmatrix]


def to_dense(A: MatrixLike) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()

    dense = np.array(A, dtype=float)
    if not np.all(np.isfinite(dense)):
        raise ValueError("matrix entries must be finite")

    return dense


def _check_cap(A: MatrixLike, cap: int) -> None:
    n = A.shape[0]
    if n > cap:
        raise CapExceededError(n, cap)


def dense_inverse(A: MatrixLike, cap: int = DEFAULT_ORACLE_CAP) -> np.ndarray:
    _check_cap(A, cap)
    dense = to_dense(A)
    if dense.shape[0] != dense.shape[1]:
        raise ValueError("only square matrices have an inverse")

    lu, piv = scipy.linalg.lu_factor(dense, check_finite=False)
    norm = max(np.abs(dense).sum(axis=1).max(initial=0.0), 1e-300)
    if np.abs(np.diag(lu)).min(initial=np.inf) <= SINGULAR_TOLERANCE * norm:
        raise SingularMatrixError("matrix is numerically singular")

    return scipy.linalg.lu_solve((lu, piv), np.eye(dense.shape[0]))


def dense_eigen_radius(A: MatrixLike, cap: int = DEFAULT_ORACLE_CAP) -> float:
    _check_cap(A, cap)
    dense = to_dense(A)
    if dense.size == 0:
        return 0.0

    return float(np.abs(np.linalg.eigvals(dense)).max())
