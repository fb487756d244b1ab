from __future__ import annotations

import heapq
import logging
import math

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.models.system import CfSplitting

logger = logging.getLogger(__name__)


def default_coarsening(n: int) -> CfSplitting:
    """The first half of the unknowns, rounded up, is coarse."""
    if n < 2:
        raise ValueError("a splitting needs at least two unknowns")

    return CfSplitting.from_coarse(n, np.arange(math.ceil(n / 2)))


def strength_of_connection(A: sp.spmatrix, theta: float) -> sp.csr_matrix:
    """S[i, j] = 1 iff j strongly influences i: -a_ij >= theta * max_k!=i (-a_ik).
    Positive couplings are never strong."""
    A = as_csr(A)
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    negated = -A.data
    off = (A.indices != rows) & (negated > 0.0)

    row_max = np.zeros(n)
    np.maximum.at(row_max, rows[off], negated[off])
    strong = off & (negated >= theta * row_max[rows])

    return sp.csr_matrix(
        (np.ones(int(strong.sum())), (rows[strong], A.indices[strong])),
        shape=(n, n),
    )


def _greedy_coarse_points(S: sp.csr_matrix) -> np.ndarray:
    n = S.shape[0]
    ST = S.T.tocsr()
    measure = np.diff(ST.indptr).astype(np.int64)
    undecided = np.ones(n, dtype=bool)
    coarse = np.zeros(n, dtype=bool)

    heap = [(-int(measure[i]), i) for i in range(n)]
    heapq.heapify(heap)

    def bump(k: int, delta: int) -> None:
        measure[k] += delta
        heapq.heappush(heap, (-int(measure[k]), k))

    while heap:
        negative_measure, j = heapq.heappop(heap)
        if not undecided[j] or -negative_measure != measure[j]:
            continue

        coarse[j] = True
        undecided[j] = False

        for i in ST.indices[ST.indptr[j] : ST.indptr[j + 1]]:
            if not undecided[i]:
                continue
            undecided[i] = False
            for k in S.indices[S.indptr[i] : S.indptr[i + 1]]:
                if undecided[k]:
                    bump(k, 1)

        for k in S.indices[S.indptr[j] : S.indptr[j + 1]]:
            if undecided[k]:
                bump(k, -1)

    return np.flatnonzero(coarse)


def ruge_stueben_coarsening(A: sp.spmatrix, theta: float = 0.25) -> CfSplitting:
    """First pass of classical coarsening: repeatedly make the undecided point with
    the most strong transpose connections coarse (ties to the lowest index) and the
    points it strongly influences fine."""
    if not 0.0 < theta < 1.0:
        raise ValueError("strength threshold must lie in (0, 1)")

    A = as_csr(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("coarsening needs a square matrix")

    coarse = _greedy_coarse_points(strength_of_connection(A, theta))
    if n >= 2 and (coarse.size == 0 or coarse.size == n):
        logger.info(
            "coarsening left %d of %d points coarse, using the default rule",
            coarse.size,
            n,
        )
        return CfSplitting.from_coarse(n, default_coarsening(n).coarse, fallback=True)

    return CfSplitting.from_coarse(n, coarse)
