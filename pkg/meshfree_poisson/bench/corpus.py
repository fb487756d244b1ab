from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.assembly.assemble import assemble
from meshfree_poisson.assembly.structure import analyze_matrix
from meshfree_poisson.bench.problems import disk_boundary_points
from meshfree_poisson.config import GeometryConfig
from meshfree_poisson.config import StencilConfig
from meshfree_poisson.errors import MeshfreeError
from meshfree_poisson.geometry.cloud import generate_cloud
from meshfree_poisson.geometry.domains import DiskDomain
from meshfree_poisson.linalg.sparse import as_csr

logger = logging.getLogger(__name__)

CORPUS_CAP = 300


@dataclass(frozen=True, eq=False)
class CorpusEntry:
    name: str
    A: sp.csr_matrix

    @property
    def n(self) -> int:
        return int(self.A.shape[0])


def poisson_1d(n: int) -> sp.csr_matrix:
    """tridiag(-1, 2, -1)."""
    return as_csr(sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)))


def poisson_2d(side: int) -> sp.csr_matrix:
    """5-point Laplacian on a side x side grid with Dirichlet boundary eliminated."""
    T = poisson_1d(side)
    identity = sp.identity(side, format="csr")
    return as_csr(sp.kron(identity, T) + sp.kron(T, identity))


def certified(A: sp.spmatrix) -> bool:
    report = analyze_matrix(A, np.empty(0, dtype=np.int64), run_oracles=True)
    return bool(report.m_matrix_by_oracle)


def m_matrix_corpus(
    clouds: int = 20,
    seed: int = 1,
    cap: int = CORPUS_CAP,
) -> List[CorpusEntry]:
    """Grid Laplacians and reduced L1 matrices of random disk clouds, each certified
    as an M-matrix by the dense inverse oracle."""
    entries = [
        CorpusEntry("poisson1d_8", poisson_1d(8)),
        CorpusEntry("poisson1d_31", poisson_1d(31)),
        CorpusEntry("poisson2d_6", poisson_2d(6)),
        CorpusEntry("poisson2d_12", poisson_2d(12)),
    ]

    rng = np.random.default_rng(seed)
    geometry = GeometryConfig()
    for index in range(clouds):
        interior = int(rng.integers(40, min(cap, 200)))
        domain = DiskDomain(
            interior_points=interior,
            boundary_points=disk_boundary_points(interior),
            seed=seed + index,
        )
        try:
            cloud = generate_cloud(domain, geometry)
            system = assemble(cloud, StencilConfig(method="l1"), domain=domain)
        except MeshfreeError as e:
            logger.warning("skipping corpus cloud %d: %s", index, e)
            continue

        A = system.reduced().A
        if A.shape[0] <= cap and certified(A):
            entries.append(CorpusEntry(f"disk_l1_{seed + index}", A))
        else:
            logger.warning("corpus cloud %d is not a certified M-matrix", index)

    return [entry for entry in entries if entry.n <= cap]
