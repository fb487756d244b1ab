from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import Optional

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.errors import InvalidSplittingError
from meshfree_poisson.models.cloud import PointCloud
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.kinds import StencilMethod


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    A: sp.csr_matrix
    rhs: np.ndarray
    unknowns: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray

    def expand(self, u: np.ndarray) -> np.ndarray:
        full = np.empty(self.unknowns.size + self.dirichlet.size)
        full[self.unknowns] = u
        full[self.dirichlet] = self.dirichlet_values
        return full


def eliminate_dirichlet(
    A: sp.csr_matrix,
    rhs: np.ndarray,
    dirichlet: np.ndarray,
) -> ReducedSystem:
    """Drops the Dirichlet rows and moves their known values to the right-hand side."""
    dirichlet = np.asarray(dirichlet, dtype=np.int64)
    unknowns = np.setdiff1d(np.arange(A.shape[0]), dirichlet)
    values = np.asarray(rhs, dtype=float)[dirichlet]

    rows = A[unknowns]
    reduced = rows[:, unknowns].tocsr()
    reduced.sort_indices()
    rhs = np.asarray(rhs, dtype=float)[unknowns] - rows[:, dirichlet] @ values
    return ReducedSystem(reduced, rhs, unknowns, dirichlet, values)


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """A u = rhs with A approximating -Laplace on the cloud. Row i belongs to point
    i; Dirichlet rows are identity rows."""

    A: sp.csr_matrix
    rhs: np.ndarray
    cloud: PointCloud
    method: StencilMethod
    params: Dict[str, Any] = field(default_factory=dict)
    # simplex pivots per row, -1 where no linear program was solved
    pivot_counts: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    def dirichlet_rows(self) -> np.ndarray:
        return self.cloud.indices_of(PointKind.DIRICHLET)

    def reduced(self) -> ReducedSystem:
        return eliminate_dirichlet(self.A, self.rhs, self.dirichlet_rows())


@dataclass(frozen=True, eq=False)
class CfSplitting:
    """Partition of 0..n-1 into fine (F) and coarse (C) points. `fallback` marks a
    splitting that was replaced by the default rule."""

    n: int
    coarse: np.ndarray
    fine: np.ndarray
    fallback: bool = False

    def __post_init__(self) -> None:
        coarse = np.sort(np.asarray(self.coarse, dtype=np.int64))
        fine = np.sort(np.asarray(self.fine, dtype=np.int64))
        object.__setattr__(self, "coarse", coarse)
        object.__setattr__(self, "fine", fine)

        merged = np.concatenate((fine, coarse))
        if merged.size != self.n or not np.array_equal(
            np.sort(merged),
            np.arange(self.n),
        ):
            raise InvalidSplittingError("F and C must partition the index set")

    @classmethod
    def from_coarse(
        cls,
        n: int,
        coarse: np.ndarray,
        fallback: bool = False,
    ) -> CfSplitting:
        coarse = np.asarray(coarse, dtype=np.int64)
        fine = np.setdiff1d(np.arange(n), coarse)
        return cls(n, coarse, fine, fallback)

    @property
    def permutation(self) -> np.ndarray:
        """F points first, then C points, each ascending."""
        return np.concatenate((self.fine, self.coarse))

    @property
    def n_fine(self) -> int:
        return int(self.fine.size)

    @property
    def n_coarse(self) -> int:
        return int(self.coarse.size)
