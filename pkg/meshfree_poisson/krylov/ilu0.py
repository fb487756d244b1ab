from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import spsolve_triangular

from meshfree_poisson.errors import ZeroPivotError
from meshfree_poisson.linalg.sparse import as_csr

# pivots below this fraction of the original row maximum are zero
PIVOT_TOLERANCE = 1e-14


@dataclass(frozen=True, eq=False)
class Ilu0Factors:
    """L is unit lower triangular, U upper triangular, both on the pattern of A."""

    L: sp.csr_matrix
    U: sp.csr_matrix

    @property
    def shape(self):
        return self.L.shape

    def solve(self, r: np.ndarray) -> np.ndarray:
        y = spsolve_triangular(self.L, r, lower=True, unit_diagonal=True)
        return spsolve_triangular(self.U, y, lower=False)

    def aslinearoperator(self) -> LinearOperator:
        return LinearOperator(self.L.shape, matvec=self.solve, dtype=float)


def ilu0(A: sp.spmatrix) -> Ilu0Factors:
    """Incomplete LU factorization without fill-in (IKJ variant)."""
    A = as_csr(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("ILU(0) needs a square matrix")

    indptr = A.indptr
    indices = A.indices
    data = A.data
    row_scale = np.array(
        [
            np.abs(data[indptr[i] : indptr[i + 1]]).max(initial=0.0)
            for i in range(n)
        ],
    )

    diagonal = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        hits = np.flatnonzero(indices[indptr[i] : indptr[i + 1]] == i)
        if hits.size == 0:
            raise ZeroPivotError(i)
        diagonal[i] = indptr[i] + hits[0]

    for i in range(n):
        columns: Dict[int, int] = {
            int(indices[pos]): pos for pos in range(indptr[i], indptr[i + 1])
        }
        for pos in range(indptr[i], diagonal[i]):
            k = int(indices[pos])
            data[pos] /= data[diagonal[k]]
            factor = data[pos]
            for upper in range(diagonal[k] + 1, indptr[k + 1]):
                target = columns.get(int(indices[upper]))
                if target is not None:
                    data[target] -= factor * data[upper]

        if abs(data[diagonal[i]]) < PIVOT_TOLERANCE * max(row_scale[i], 1e-300):
            raise ZeroPivotError(i)

    lower = sp.tril(A, k=-1, format="csr") + sp.identity(n, format="csr")
    upper = sp.triu(A, k=0, format="csr")
    return Ilu0Factors(as_csr(lower), as_csr(upper))
