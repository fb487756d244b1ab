from __future__ import annotations

import logging
from typing import Optional
from typing import Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from meshfree_poisson.errors import SingularMatrixError
from meshfree_poisson.errors import SolverFailureError
from meshfree_poisson.krylov.bicgstab import bicgstab
from meshfree_poisson.krylov.ilu0 import ilu0
from meshfree_poisson.linalg.dense import DEFAULT_ORACLE_CAP
from meshfree_poisson.linalg.dense import dense_inverse
from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.models.reports import StructureReport
from meshfree_poisson.models.system import LinearSystem

logger = logging.getLogger(__name__)

# predicates compare against this fraction of the row scale
ROW_TOLERANCE = 1e-12
INVERSE_TOLERANCE = 1e-10
MAX_PRINCIPLE_TOLERANCE = 1e-9


def _reaches(A: sp.csr_matrix, sources: np.ndarray) -> np.ndarray:
    """Rows from which a directed path in G(A) = {(i, j): a_ij != 0} leads to one of
    `sources`, found by a search from a super source along reversed edges."""
    n = A.shape[0]
    if sources.size == 0:
        return np.zeros(n, dtype=bool)

    reversed_graph = sp.csr_matrix(
        (np.ones(A.nnz), A.indices, A.indptr),
        shape=(n, n),
    ).T.tocoo()
    rows = np.concatenate((reversed_graph.row, np.full(sources.size, n)))
    cols = np.concatenate((reversed_graph.col, sources))
    graph = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n + 1, n + 1))

    order = breadth_first_order(graph, n, directed=True, return_predecessors=False)
    reached = np.zeros(n + 1, dtype=bool)
    reached[order] = True
    return reached[:n]


def _rows_without_couplings(A: sp.csr_matrix) -> np.ndarray:
    counts = np.diff(A.indptr)
    diagonal = A.diagonal()
    return np.flatnonzero((counts == 1) & (diagonal != 0.0) | (counts == 0))


def analyze_matrix(
    A: sp.spmatrix,
    dirichlet_rows: Optional[np.ndarray] = None,
    run_oracles: bool = False,
    cap: int = DEFAULT_ORACLE_CAP,
) -> StructureReport:
    """Z/L-matrix, diagonal dominance, connectivity and M-matrix predicates.

    Without `dirichlet_rows`, rows without off-diagonal entries play that role.
    """
    A = as_csr(A)
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    off = A.indices != rows
    magnitudes = np.abs(A.data)

    row_scale = np.zeros(n)
    np.maximum.at(row_scale, rows, magnitudes)
    tolerance = ROW_TOLERANCE * row_scale

    positive_off = off & (A.data > tolerance[rows])
    z_offenders = np.unique(rows[positive_off])
    diagonal = A.diagonal()
    l_offenders = np.flatnonzero(diagonal <= tolerance)

    off_sum = np.zeros(n)
    np.add.at(off_sum, rows[off], magnitudes[off])
    margin = np.abs(diagonal) - off_sum
    dd_tolerance = ROW_TOLERANCE * (np.abs(diagonal) + off_sum)
    weak_offenders = np.flatnonzero(margin < -dd_tolerance)
    strict_rows = np.flatnonzero(margin > dd_tolerance)

    if dirichlet_rows is None:
        dirichlet_rows = _rows_without_couplings(A)
    dirichlet_rows = np.asarray(dirichlet_rows, dtype=np.int64)

    connected = _reaches(A, dirichlet_rows)
    dominant = _reaches(A, strict_rows)

    is_z = z_offenders.size == 0
    is_l = is_z and l_offenders.size == 0
    weakly_dd = weak_offenders.size == 0
    essentially_dd = weakly_dd and bool(dominant.all())

    offending = {
        "z": z_offenders.tolist(),
        "l": l_offenders.tolist(),
        "weakly_dd": weak_offenders.tolist(),
        "essentially_irreducible": np.flatnonzero(~connected).tolist(),
        "essentially_dd": np.flatnonzero(~dominant).tolist(),
    }

    m_by_oracle: Optional[bool] = None
    inverse_positive: Optional[bool] = None
    if run_oracles and n > cap:
        logger.warning("skipping the dense M-matrix oracle: n=%d exceeds %d", n, cap)
    elif run_oracles:
        try:
            inverse = dense_inverse(A, cap)
        except SingularMatrixError:
            inverse_positive = False
        else:
            scale = max(1.0, float(np.abs(inverse).max()))
            inverse_positive = bool(np.all(inverse >= -INVERSE_TOLERANCE * scale))
        m_by_oracle = is_z and inverse_positive

    m_sufficient = is_l and essentially_dd
    consistent = not (m_sufficient and m_by_oracle is False)
    if not consistent:
        logger.warning("sufficient M-matrix condition holds but the oracle disagrees")

    return StructureReport(
        n=n,
        nnz=A.nnz,
        is_z=is_z,
        is_l=is_l,
        weakly_dd=weakly_dd,
        strictly_dd_rows=strict_rows.tolist(),
        essentially_irreducible=bool(connected.all()),
        essentially_dd=essentially_dd,
        m_matrix_by_sufficient_condition=m_sufficient,
        m_matrix_by_oracle=m_by_oracle,
        inverse_positive_by_oracle=inverse_positive,
        consistent=consistent,
        offending_rows={key: value for key, value in offending.items() if value},
    )


def structure_report(
    system: LinearSystem,
    run_oracles: bool = False,
    cap: int = DEFAULT_ORACLE_CAP,
) -> StructureReport:
    return analyze_matrix(system.A, system.dirichlet_rows(), run_oracles, cap)


def discrete_max_principle_check(
    system: Union[LinearSystem, sp.spmatrix],
    trials: int = 20,
    seed: int = 0,
    cap: int = DEFAULT_ORACLE_CAP,
) -> bool:
    """Solves A x = y for random y <= 0 and checks x <= 0 up to round-off."""
    A = as_csr(system.A if isinstance(system, LinearSystem) else system)
    n = A.shape[0]
    rng = np.random.default_rng(seed)

    if n <= cap:
        factors = scipy.linalg.lu_factor(A.toarray())

        def solve(y: np.ndarray) -> np.ndarray:
            return scipy.linalg.lu_solve(factors, y)

    else:
        preconditioner = ilu0(A).aslinearoperator()

        def solve(y: np.ndarray) -> np.ndarray:
            x, report = bicgstab(A, y, preconditioner, tol=1e-12, max_iter=5 * n)
            if not report.converged:
                raise SolverFailureError("bicgstab did not converge")
            return x

    for _ in range(trials):
        y = -rng.random(n)
        x = solve(y)
        if np.any(x > MAX_PRINCIPLE_TOLERANCE * np.abs(x).max()):
            return False

    return True
