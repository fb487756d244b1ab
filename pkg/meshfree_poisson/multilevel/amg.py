from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from meshfree_poisson.config import AmgConfig
from meshfree_poisson.errors import SingularMatrixError
from meshfree_poisson.krylov.stationary import gauss_seidel_iterate
from meshfree_poisson.krylov.stationary import jacobi_iterate
from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.linalg.sparse import compact
from meshfree_poisson.models.reports import HierarchySummary
from meshfree_poisson.models.system import CfSplitting
from meshfree_poisson.multilevel.coarsening import ruge_stueben_coarsening
from meshfree_poisson.multilevel.coarsening import strength_of_connection

logger = logging.getLogger(__name__)

# a level keeping more than this share of its points coarse does not coarsen
STAGNATION_RATIO = 0.9
# denominators below this fraction of the diagonal fall back to the plain diagonal
DENOMINATOR_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class AmgLevel:
    A: sp.csr_matrix
    split: CfSplitting
    P: sp.csr_matrix
    R: sp.csr_matrix


def _promote_orphans(S: sp.csr_matrix, split: CfSplitting) -> CfSplitting:
    """F points without a strong coarse neighbor cannot interpolate and become C."""
    is_coarse = np.zeros(split.n, dtype=bool)
    is_coarse[split.coarse] = True

    orphans = [
        i
        for i in split.fine
        if not is_coarse[S.indices[S.indptr[i] : S.indptr[i + 1]]].any()
    ]
    if not orphans:
        return split

    is_coarse[orphans] = True
    return CfSplitting.from_coarse(split.n, np.flatnonzero(is_coarse), split.fallback)


def direct_interpolation(
    A: sp.csr_matrix,
    S: sp.csr_matrix,
    split: CfSplitting,
) -> sp.csr_matrix:
    """Classical direct interpolation onto the coarse points.

    For an F point i with strong coarse neighbors C_i the weights are
    w_ij = -alpha_i a_ij / d_i, where alpha_i is the ratio of all negative couplings to
    the negative couplings into C_i and d_i is the diagonal with the positive
    off-diagonal couplings lumped in. Rows with nothing to interpolate from stay zero.
    """
    n = split.n
    coarse_index = np.full(n, -1, dtype=np.int64)
    coarse_index[split.coarse] = np.arange(split.n_coarse)

    rows: List[int] = list(split.coarse)
    cols: List[int] = list(range(split.n_coarse))
    vals: List[float] = [1.0] * split.n_coarse

    for i in split.fine:
        start, stop = A.indptr[i], A.indptr[i + 1]
        columns = A.indices[start:stop]
        values = A.data[start:stop]
        off = columns != i
        diagonal = float(values[~off].sum())

        strong = set(S.indices[S.indptr[i] : S.indptr[i + 1]].tolist())
        in_strong = np.array([int(c) in strong for c in columns], dtype=bool)
        interpolatory = off & (coarse_index[columns] >= 0) & in_strong
        if not interpolatory.any():
            continue

        negative = off & (values < 0.0)
        negative_into_coarse = float(values[interpolatory & negative].sum())
        if negative_into_coarse == 0.0:
            continue

        alpha = float(values[negative].sum()) / negative_into_coarse
        lumped = diagonal + float(values[off & (values > 0.0)].sum())
        if abs(lumped) <= DENOMINATOR_GUARD * abs(diagonal):
            lumped = diagonal

        for c, a_ic in zip(columns[interpolatory], values[interpolatory]):
            if a_ic >= 0.0:
                continue
            rows.append(int(i))
            cols.append(int(coarse_index[c]))
            vals.append(-alpha * float(a_ic) / lumped)

    return sp.csr_matrix((vals, (rows, cols)), shape=(n, split.n_coarse))


class AmgHierarchy:
    """Ruge-Stuben levels with Galerkin coarse matrices R A P.

    R is the transpose of the interpolation built for A^T on the same splitting, which
    equals P^T for symmetric A.
    """

    def __init__(
        self,
        levels: List[AmgLevel],
        coarsest: sp.csr_matrix,
        config: AmgConfig,
        truncated: bool = False,
    ) -> None:
        self.levels = levels
        self.coarsest = coarsest
        self.config = config
        self.truncated = truncated

        dense = coarsest.toarray()
        self._coarsest_factors = scipy.linalg.lu_factor(dense, check_finite=False)
        pivots = np.abs(np.diag(self._coarsest_factors[0]))
        scale = max(float(np.abs(dense).max(initial=0.0)), 1e-300)
        if pivots.size and pivots.min() <= 1e-14 * scale:
            raise SingularMatrixError("coarsest AMG matrix is singular")

    @property
    def matrices(self) -> List[sp.csr_matrix]:
        return [level.A for level in self.levels] + [self.coarsest]

    def _smooth(self, A: sp.csr_matrix, x: np.ndarray, b: np.ndarray, sweeps: int):
        if sweeps == 0:
            return x
        if self.config.smoother == "jacobi":
            return jacobi_iterate(A, b, x, sweeps)

        return gauss_seidel_iterate(A, b, x, sweeps)

    def _cycle(self, depth: int, x: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
        if depth == len(self.levels):
            return scipy.linalg.lu_solve(self._coarsest_factors, b)

        level = self.levels[depth]
        x = self._smooth(level.A, x, b, self.config.pre_sweeps)

        r_coarse = level.R @ (b - level.A @ x)
        e_coarse = np.zeros(r_coarse.shape[0])
        e_coarse = self._cycle(depth + 1, e_coarse, r_coarse, kind)
        if kind == "F":
            e_coarse = self._cycle(depth + 1, e_coarse, r_coarse, "V")
        x = x + level.P @ e_coarse

        return self._smooth(level.A, x, b, self.config.post_sweeps)

    def cycle(self, b: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
        return self._cycle(0, x, b, self.config.cycle)

    def aspreconditioner(self) -> LinearOperator:
        n = self.matrices[0].shape[0]
        return LinearOperator((n, n), matvec=self.cycle, dtype=float)

    def summary(self) -> HierarchySummary:
        matrices = self.matrices
        nnz = [int(A.nnz) for A in matrices]
        return HierarchySummary(
            levels=len(matrices),
            sizes=[int(A.shape[0]) for A in matrices],
            nnz=nnz,
            operator_complexity=sum(nnz) / max(nnz[0], 1),
            cycle=self.config.cycle,
            truncated=self.truncated,
        )


def build_amg(A: sp.spmatrix, config: AmgConfig = AmgConfig()) -> AmgHierarchy:
    A = as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("AMG needs a square matrix")

    levels: List[AmgLevel] = []
    truncated = False
    stagnant = 0

    while A.shape[0] > config.coarsest_cap and len(levels) + 1 < config.max_levels:
        n = A.shape[0]
        S = strength_of_connection(A, config.theta)
        split = _promote_orphans(S, ruge_stueben_coarsening(A, config.theta))

        stagnant = stagnant + 1 if split.n_coarse > STAGNATION_RATIO * n else 0
        if split.n_coarse == n or stagnant >= 2:
            truncated = True
            logger.info("coarsening stagnated at level %d (n=%d)", len(levels), n)
            break

        P = direct_interpolation(A, S, split)
        AT = as_csr(A.T)
        ST = strength_of_connection(AT, config.theta)
        R = as_csr(direct_interpolation(AT, ST, split).T)
        levels.append(AmgLevel(A, split, as_csr(P), R))
        A = compact(as_csr(R @ A @ P))

    truncated = truncated or A.shape[0] > config.coarsest_cap
    hierarchy = AmgHierarchy(levels, A, config, truncated)
    logger.info("AMG hierarchy sizes %s", hierarchy.summary().sizes)
    return hierarchy
