from __future__ import annotations

import logging
from typing import Callable
from typing import Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import splu
from scipy.sparse.linalg import spsolve_triangular

from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.errors import SingularFineBlockError
from meshfree_poisson.errors import SingularSchurError
from meshfree_poisson.errors import ZeroPivotError
from meshfree_poisson.krylov.ilu0 import ilu0
from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.linalg.sparse import extract_blocks
from meshfree_poisson.models.kinds import AmliVariant
from meshfree_poisson.models.kinds import FineKind
from meshfree_poisson.models.system import CfSplitting

logger = logging.getLogger(__name__)

# pivots of the coarse factorization below this fraction of the Schur norm are zero
SCHUR_PIVOT_TOLERANCE = 1e-14

FineSolve = Callable[[np.ndarray], np.ndarray]


def _jacobi_solver(block: sp.csr_matrix) -> FineSolve:
    diagonal = block.diagonal()
    zero = np.flatnonzero(diagonal == 0.0)
    if zero.size:
        raise SingularFineBlockError(f"zero diagonal in fine row {zero[0]}")

    def solve(r: np.ndarray) -> np.ndarray:
        return r / diagonal if r.ndim == 1 else r / diagonal[:, None]

    return solve


def _gauss_seidel_solver(block: sp.csr_matrix) -> FineSolve:
    _jacobi_solver(block)
    lower = sp.tril(block, k=0, format="csr")

    def solve(r: np.ndarray) -> np.ndarray:
        return spsolve_triangular(lower, r, lower=True)

    return solve


def _ilu0_solver(block: sp.csr_matrix) -> FineSolve:
    try:
        factors = ilu0(block)
    except ZeroPivotError as e:
        raise SingularFineBlockError(f"ILU(0) of the fine block failed: {e}") from e

    return factors.solve


def _exact_solver(block: sp.csr_matrix) -> FineSolve:
    try:
        factors = splu(block.tocsc())
    except RuntimeError as e:
        raise SingularFineBlockError(f"fine block is singular: {e}") from e

    return factors.solve


FINE_SOLVERS = {
    FineKind.JACOBI: _jacobi_solver,
    FineKind.GAUSS_SEIDEL: _gauss_seidel_solver,
    FineKind.ILU0: _ilu0_solver,
    FineKind.EXACT: _exact_solver,
}


class TwoGridOperator:
    """Approximate block factorization of A in F/C ordering.

    The fine block is replaced by an approximation Ã_FF and the Schur complement by
    S̃ = A_CC - A_CF Ã_FF^-1 A_FC, which is assembled densely and LU factored.
    `step` performs one sweep of the chosen variant; all linear parts act on a vector
    or on the columns of a matrix.
    """

    def __init__(
        self,
        A: sp.spmatrix,
        split: CfSplitting,
        fine_kind: FineKind = FineKind.GAUSS_SEIDEL,
        variant: AmliVariant = AmliVariant.AMLI,
    ) -> None:
        self.A = as_csr(A)
        if self.A.shape != (split.n, split.n):
            raise DimensionMismatchError("splitting does not match the matrix size")

        self.split = split
        self.fine_kind = fine_kind
        self.variant = variant
        self.A_FF, self.A_FC, self.A_CF, self.A_CC = extract_blocks(self.A, split)

        self._fine_solve = FINE_SOLVERS[fine_kind](self.A_FF)

        # W = Ã_FF^-1 A_FC, so that P_c y = [-W y; y]
        self.W = np.asarray(self._fine_solve(self.A_FC.toarray()), dtype=float)
        self.W = self.W.reshape(split.n_fine, split.n_coarse)
        self.schur = self.A_CC.toarray() - self.A_CF @ self.W

        self._coarse_factors = scipy.linalg.lu_factor(self.schur, check_finite=False)
        pivots = np.abs(np.diag(self._coarse_factors[0]))
        scale = max(float(np.abs(self.schur).max(initial=0.0)), 1e-300)
        if pivots.size and pivots.min() <= SCHUR_PIVOT_TOLERANCE * scale:
            raise SingularSchurError("approximate Schur complement is singular")

        logger.debug(
            "two-grid operator: %d fine, %d coarse, %s, %s",
            split.n_fine,
            split.n_coarse,
            fine_kind.name,
            variant.name,
        )

    @property
    def n(self) -> int:
        return self.split.n

    def fine_solve(self, r_fine: np.ndarray) -> np.ndarray:
        return np.asarray(self._fine_solve(r_fine), dtype=float).reshape(r_fine.shape)

    def coarse_solve(self, r_coarse: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._coarse_factors, r_coarse)

    def _split(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return r[self.split.fine], r[self.split.coarse]

    def fine_correction(self, r: np.ndarray) -> np.ndarray:
        """B_F r = [Ã_FF^-1 r_F; 0]."""
        e = np.zeros_like(r, dtype=float)
        e[self.split.fine] = self.fine_solve(r[self.split.fine])
        return e

    def coarse_correction(self, r: np.ndarray) -> np.ndarray:
        """B_C r = P_c S̃^-1 R_c r with R_c = [-A_CF Ã_FF^-1, I] and P_c = [-W; I]."""
        r_fine, r_coarse = self._split(r)
        y = self.coarse_solve(r_coarse - self.A_CF @ self.fine_solve(r_fine))
        e = np.zeros_like(r, dtype=float)
        e[self.split.fine] = -self.W @ y
        e[self.split.coarse] = y
        return e

    def step(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        """x + M^-1 (b - A x) for the operator's variant."""
        x = np.array(x, dtype=float)
        b = np.asarray(b, dtype=float)

        if self.variant == AmliVariant.AMLI:
            r = b - self.A @ x
            return x + self.fine_correction(r) + self.coarse_correction(r)

        if self.variant == AmliVariant.MAMLI:
            order = (self.fine_correction, self.coarse_correction)
        elif self.variant == AmliVariant.RMAMLI:
            order = (self.coarse_correction, self.fine_correction)
        else:
            order = (self.fine_correction, self.coarse_correction, self.fine_correction)

        for correction in order:
            x = x + correction(b - self.A @ x)

        return x

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.step(np.zeros_like(r), r)

    def aspreconditioner(self) -> LinearOperator:
        return LinearOperator(
            self.A.shape,
            matvec=self.apply,
            matmat=self.apply,
            dtype=float,
        )


def build_two_grid(
    A: sp.spmatrix,
    split: CfSplitting,
    fine_kind: FineKind = FineKind.GAUSS_SEIDEL,
    variant: AmliVariant = AmliVariant.AMLI,
) -> TwoGridOperator:
    return TwoGridOperator(A, split, fine_kind, variant)
