from __future__ import annotations

import time
from typing import Optional
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.sparse.linalg import spsolve_triangular

from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.models.reports import SolveReport


def _diagonal(A: sp.csr_matrix) -> np.ndarray:
    diagonal = A.diagonal()
    zero = np.flatnonzero(diagonal == 0.0)
    if zero.size:
        raise ValueError(f"zero diagonal entry in row {zero[0]}")

    return diagonal


def _start(A: sp.csr_matrix, b: np.ndarray, x0: Optional[np.ndarray]) -> np.ndarray:
    if A.shape[0] != b.shape[0]:
        raise DimensionMismatchError("matrix and right-hand side sizes differ")

    return np.zeros(b.shape[0]) if x0 is None else np.array(x0, dtype=float)


def jacobi_iterate(
    A: sp.spmatrix,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    sweeps: int = 1,
) -> np.ndarray:
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    diagonal = _diagonal(A)
    x = _start(A, b, x0)

    for _ in range(sweeps):
        x = x + (b - A @ x) / diagonal

    return x


def gauss_seidel_iterate(
    A: sp.spmatrix,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    sweeps: int = 1,
) -> np.ndarray:
    """Forward sweeps in ascending index order: (D + L) x_new = b - U x_old."""
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    _diagonal(A)
    x = _start(A, b, x0)

    lower = sp.tril(A, k=0, format="csr")
    strictly_upper = sp.triu(A, k=1, format="csr")
    for _ in range(sweeps):
        x = spsolve_triangular(lower, b - strictly_upper @ x, lower=True)

    return x


def jacobi_iteration_matrix(A: sp.spmatrix) -> np.ndarray:
    """Dense I - D^-1 A."""
    A = as_csr(A)
    diagonal = _diagonal(A)
    return np.eye(A.shape[0]) - A.toarray() / diagonal[:, None]


def gauss_seidel_iteration_matrix(A: sp.spmatrix) -> np.ndarray:
    """Dense I - (D + L)^-1 A."""
    A = as_csr(A)
    _diagonal(A)
    lower = sp.tril(A, k=0, format="csr")
    return np.eye(A.shape[0]) - spsolve_triangular(lower, A.toarray(), lower=True)


def direct_solve(A: sp.spmatrix, b: np.ndarray) -> Tuple[np.ndarray, SolveReport]:
    """Sparse LU reference solve."""
    started = time.perf_counter()
    b = np.asarray(b, dtype=float)
    A = as_csr(A)
    x = np.atleast_1d(spsolve(A.tocsc(), b))

    norm_b = float(np.linalg.norm(b))
    relres = float(np.linalg.norm(b - A @ x)) / norm_b if norm_b else 0.0
    converged = bool(np.isfinite(relres))
    return x, SolveReport(
        solver="direct",
        converged=converged,
        iterations=1,
        residual_history=[relres],
        diverged=not converged,
        wall_time=time.perf_counter() - started,
    )
