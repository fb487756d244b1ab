from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List
from typing import Tuple
from typing import Union

import numpy as np
import scipy.linalg

from meshfree_poisson.errors import CycleLimitError
from meshfree_poisson.errors import UnboundedError
from meshfree_poisson.models.stencil import Infeasible

logger = logging.getLogger(__name__)

# reduced costs and pivot column entries below this are treated as zero
PIVOT_TOLERANCE = 1e-11
RATIO_TIE_TOLERANCE = 1e-12
FEASIBILITY_TOLERANCE = 1e-9
CYCLE_FACTOR = 50


@dataclass(frozen=True, eq=False)
class BasicSolution:
    basis: np.ndarray
    values: np.ndarray
    x: np.ndarray
    objective: float
    pivot_count: int


SimplexResult = Union[BasicSolution, Infeasible]


class _RevisedSimplex:
    """Revised simplex on min c.x s.t. A x = b, x >= 0 with a given feasible basis.

    Entering variable: lowest index with negative reduced cost. Leaving variable:
    minimum ratio, ties to the lowest variable index. Together this is Bland's rule
    and the iteration cannot cycle.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, limit: int) -> None:
        self.A = A
        self.b = b
        self.limit = limit
        self.pivots = 0

    def basic_values(self, basis: List[int]) -> np.ndarray:
        return scipy.linalg.solve(self.A[:, basis], self.b)

    def run(self, c: np.ndarray, basis: List[int], columns: int) -> List[int]:
        k = self.A.shape[0]
        while True:
            B = self.A[:, basis]
            lu = scipy.linalg.lu_factor(B)
            x_b = scipy.linalg.lu_solve(lu, self.b)
            y = scipy.linalg.lu_solve(lu, c[basis], trans=1)

            reduced = c[:columns] - self.A[:, :columns].T @ y
            reduced[basis] = 0.0
            candidates = np.flatnonzero(reduced < -PIVOT_TOLERANCE)
            if candidates.size == 0:
                return basis

            entering = int(candidates[0])
            direction = scipy.linalg.lu_solve(lu, self.A[:, entering])

            rows = [i for i in range(k) if direction[i] > PIVOT_TOLERANCE]
            if not rows:
                raise UnboundedError(f"column {entering} is an unbounded direction")

            ratios = np.array([max(x_b[i], 0.0) / direction[i] for i in rows])
            best = ratios.min()
            tied = [
                row
                for row, ratio in zip(rows, ratios)
                if ratio <= best + RATIO_TIE_TOLERANCE * max(1.0, best)
            ]
            leaving = min(tied, key=lambda row: basis[row])

            basis = list(basis)
            basis[leaving] = entering
            self.pivots += 1
            if self.pivots > self.limit:
                raise CycleLimitError(
                    f"simplex exceeded {self.limit} pivots without terminating",
                )


def _drive_out_artificials(
    A: np.ndarray,
    b: np.ndarray,
    basis: List[int],
    m: int,
) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """Replaces the artificial variables left at zero in the phase-one basis and
    drops rows that turn out redundant. Returns the system rewritten in the final
    basis, B^-1 A and B^-1 b, restricted to the original columns."""
    full = np.hstack((A, np.eye(A.shape[0])))

    while True:
        lu = scipy.linalg.lu_factor(full[:, basis])
        tableau = scipy.linalg.lu_solve(lu, full[:, :m])
        artificial = [i for i, var in enumerate(basis) if var >= m]
        if not artificial:
            values = scipy.linalg.lu_solve(lu, b)
            return tableau, values, basis

        position = artificial[0]
        row = tableau[position]
        nonbasic = [
            j for j in range(m) if j not in basis and abs(row[j]) > PIVOT_TOLERANCE
        ]
        if nonbasic:
            basis = list(basis)
            basis[position] = nonbasic[0]
            continue

        # the row is a combination of the others
        values = scipy.linalg.lu_solve(lu, b)
        keep = [i for i in range(len(basis)) if i != position]
        full = np.hstack((tableau[keep], np.eye(len(keep))))
        b = values[keep]
        # in the rewritten system the artificial of row i is column m + i
        basis = [
            basis[i] if basis[i] < m else m + row for row, i in enumerate(keep)
        ]


def simplex_solve(A_eq: np.ndarray, b_eq: np.ndarray, c: np.ndarray) -> SimplexResult:
    """Two-phase revised simplex for min c.x s.t. A_eq x = b_eq, x >= 0."""
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    c = np.array(c, dtype=float)
    if not all(np.all(np.isfinite(array)) for array in (A, b, c)):
        raise ValueError("simplex inputs must be finite")

    k, m = A.shape
    limit = CYCLE_FACTOR * (k + m)

    negative = b < 0.0
    A[negative] *= -1.0
    b[negative] *= -1.0

    # phase one: artificial variables m..m+k-1 start in the basis
    phase_one = _RevisedSimplex(np.hstack((A, np.eye(k))), b, limit)
    cost = np.concatenate((np.zeros(m), np.ones(k)))
    basis = phase_one.run(cost, list(range(m, m + k)), m + k)
    values = phase_one.basic_values(basis)

    infeasibility = float(sum(v for var, v in zip(basis, values) if var >= m))
    b_norm = float(np.abs(b).max(initial=0.0))
    if infeasibility > FEASIBILITY_TOLERANCE * max(1.0, b_norm):
        return Infeasible(infeasibility, phase_one.pivots)

    tableau, rhs, basis = _drive_out_artificials(A, b, basis, m)

    phase_two = _RevisedSimplex(tableau, np.maximum(rhs, 0.0), limit)
    phase_two.pivots = phase_one.pivots
    basis = phase_two.run(c, basis, m)
    values = np.maximum(phase_two.basic_values(basis), 0.0)

    x = np.zeros(m)
    x[basis] = values
    logger.debug("simplex finished after %d pivots", phase_two.pivots)

    return BasicSolution(
        basis=np.array(basis, dtype=np.int64),
        values=values,
        x=x,
        objective=float(c @ x),
        pivot_count=phase_two.pivots,
    )
