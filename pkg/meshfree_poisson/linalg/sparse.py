from __future__ import annotations

from typing import Tuple

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.models.system import CfSplitting

SparseMatrix = sp.csr_matrix

# entries at most this fraction of their row maximum are dropped by `compact`
COMPACTION_TOLERANCE = 1e-14


def as_csr(A) -> sp.csr_matrix:
    """Canonical CSR copy: float values, duplicates summed, sorted column indices."""
    A = sp.csr_matrix(A, dtype=float, copy=True)
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix entries must be finite")

    return A


def validate_csr(A: sp.csr_matrix) -> None:
    """Raises ValueError unless A is well-formed CSR without stored zeros."""
    n_rows = A.shape[0]
    indptr = A.indptr
    if indptr.size != n_rows + 1 or indptr[0] != 0:
        raise ValueError("row pointer has the wrong length")
    if np.any(np.diff(indptr) < 0):
        raise ValueError("row pointer is decreasing")
    if indptr[-1] != A.indices.size or A.indices.size != A.data.size:
        raise ValueError("row pointer does not end at nnz")
    if A.indices.size and (A.indices.min() < 0 or A.indices.max() >= A.shape[1]):
        raise ValueError("column index out of range")

    for row in range(n_rows):
        columns = A.indices[indptr[row] : indptr[row + 1]]
        if np.any(np.diff(columns) <= 0):
            raise ValueError(f"columns of row {row} are not strictly increasing")

    if np.any(A.data == 0.0):
        raise ValueError("matrix stores explicit zeros")


def compact(A: sp.csr_matrix, tolerance: float = COMPACTION_TOLERANCE) -> sp.csr_matrix:
    A = as_csr(A)
    magnitudes = np.abs(A.data)
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    row_max = np.zeros(A.shape[0])
    np.maximum.at(row_max, rows, magnitudes)

    A.data[magnitudes <= tolerance * row_max[rows]] = 0.0
    A.eliminate_zeros()
    A.sort_indices()
    return A


def spmv(A: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise DimensionMismatchError(
            f"cannot multiply a {A.shape[0]}x{A.shape[1]} matrix with {x.shape}",
        )

    return A @ x


def extract_blocks(
    A: sp.csr_matrix,
    split: CfSplitting,
) -> Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """A_FF, A_FC, A_CF, A_CC of the permuted matrix P A P^T (F first, then C)."""
    if A.shape != (split.n, split.n):
        raise DimensionMismatchError("splitting does not match the matrix size")

    A = as_csr(A)
    fine_rows = A[split.fine]
    coarse_rows = A[split.coarse]
    blocks = (
        fine_rows[:, split.fine],
        fine_rows[:, split.coarse],
        coarse_rows[:, split.fine],
        coarse_rows[:, split.coarse],
    )
    return tuple(as_csr(block) for block in blocks)


def permuted(A: sp.csr_matrix, split: CfSplitting) -> sp.csr_matrix:
    perm = split.permutation
    return as_csr(A[perm][:, perm])
