from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from meshfree_poisson.assembly.assemble import assemble
from meshfree_poisson.assembly.assemble import consistency_error
from meshfree_poisson.assembly.export import export_system
from meshfree_poisson.assembly.export import load_system
from meshfree_poisson.assembly.structure import analyze_matrix
from meshfree_poisson.assembly.structure import discrete_max_principle_check
from meshfree_poisson.assembly.structure import structure_report
from meshfree_poisson.bench.corpus import poisson_1d
from meshfree_poisson.config import StencilConfig
from meshfree_poisson.errors import EmptyNeighborhoodError
from meshfree_poisson.errors import InfeasibleStencilError
from meshfree_poisson.geometry.cloud import generate_cloud
from meshfree_poisson.geometry.domains import BoxDomain
from meshfree_poisson.models.cloud import PointCloud
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.kinds import StencilMethod

# how far matrix entries and residuals can be off after round-off
TOLERANCE = 1e-9
# how far the least squares entry can be from the rounded reference value
REFERENCE_TOLERANCE = 1e-3


def _quadratic(points: np.ndarray) -> np.ndarray:
    return np.sum(points**2, axis=1)


def _square(spacing: float = 0.25, **boundary) -> BoxDomain:
    return BoxDomain(spacing=spacing, boundary=boundary)


def test_interval_rows() -> None:
    cloud = generate_cloud(BoxDomain(lower=[0.0], upper=[1.0], spacing=0.25))
    cloud = cloud.with_boundary_values(dirichlet=lambda x: 1.0 + x[:, 0])
    system = assemble(cloud, StencilConfig(method="l1"))

    dense = system.A.toarray()
    assert np.allclose(dense[0], [1.0, 0.0, 0.0, 0.0, 0.0])
    assert np.allclose(dense[4], [0.0, 0.0, 0.0, 0.0, 1.0])
    for i in (1, 2, 3):
        assert np.allclose(dense[i, i - 1 : i + 2], [-16.0, 32.0, -16.0])

    assert np.allclose(system.rhs, [1.0, 0.0, 0.0, 0.0, 2.0])
    assert system.method == StencilMethod.L1
    assert np.all(system.pivot_counts[[0, 4]] == -1)


def test_grid_rows_are_five_point() -> None:
    domain = _square()
    cloud = generate_cloud(domain)
    system = assemble(cloud, StencilConfig(method="l1"), domain=domain)

    interior = cloud.indices_of(PointKind.INTERIOR)
    row_nnz = np.diff(system.A.indptr)[interior]
    assert np.all(row_nnz == 5)
    assert np.allclose(system.A.diagonal()[interior], 64.0)
    assert system.params["search_radius"] > 0.25 * np.sqrt(2.0)


def test_grid_least_squares_rows() -> None:
    domain = _square()
    cloud = generate_cloud(domain)
    system = assemble(cloud, StencilConfig(method="lsq", neighbors=8), domain=domain)

    interior = cloud.indices_of(PointKind.INTERIOR)
    assert np.all(np.diff(system.A.indptr)[interior] == 9)
    assert system.method == StencilMethod.LSQ


def test_quadratics_are_reproduced() -> None:
    domain = _square(0.125)
    cloud = generate_cloud(domain).with_boundary_values(dirichlet=_quadratic)

    configs = (StencilConfig(method="l1"), StencilConfig(method="lsq", neighbors=12))
    for config in configs:
        system = assemble(
            cloud,
            config,
            source=lambda x: np.full(x.shape[0], -4.0),
            domain=domain,
        )
        assert consistency_error(system, _quadratic) <= TOLERANCE


def test_neumann_rows_give_the_outward_derivative() -> None:
    domain = _square(**{"x-": "neumann"})
    cloud = generate_cloud(domain)
    system = assemble(cloud, StencilConfig(method="l1"), domain=domain)

    neumann = cloud.indices_of(PointKind.NEUMANN)
    assert neumann.size == 3

    linear = cloud.points[:, 0] + 2.0 * cloud.points[:, 1]
    # the outward normal on x- is (-1, 0)
    assert np.allclose((system.A @ linear)[neumann], -1.0, atol=TOLERANCE)
    assert np.allclose(system.A.sum(axis=1).A1[neumann], 0.0, atol=TOLERANCE)


def test_empty_neighborhoods_are_reported() -> None:
    domain = _square()
    cloud = generate_cloud(domain)

    with pytest.raises(EmptyNeighborhoodError) as info:
        assemble(cloud, StencilConfig(radius=0.1), domain=domain)

    assert sorted(info.value.points) == cloud.indices_of(PointKind.INTERIOR).tolist()


def test_one_sided_point_is_infeasible() -> None:
    points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    kinds = [PointKind.INTERIOR] + [PointKind.DIRICHLET] * 3
    cloud = PointCloud.create(np.array(points), np.array(kinds))

    with pytest.raises(InfeasibleStencilError) as info:
        assemble(cloud, StencilConfig(method="l1", radius=2.0))

    assert info.value.points == [0]


def test_skewed_least_squares_row_is_not_a_z_row() -> None:
    angles = np.radians([0.0, 90.0, 180.0, 270.0, 9.0, 18.0])
    points = np.vstack(([0.0, 0.0], np.column_stack((np.cos(angles), np.sin(angles)))))
    kinds = [PointKind.INTERIOR] + [PointKind.DIRICHLET] * 6
    cloud = PointCloud.create(points, np.array(kinds))

    system = assemble(cloud, StencilConfig(method="lsq", radius=1.01))
    assert abs(system.A[0, 6] - 0.164) <= REFERENCE_TOLERANCE

    report = structure_report(system)
    assert not report.is_z
    assert report.offending_rows["z"] == [0]
    assert not report.m_matrix_by_sufficient_condition


def test_interval_structure() -> None:
    cloud = generate_cloud(BoxDomain(lower=[0.0], upper=[1.0], spacing=0.25))
    system = assemble(cloud, StencilConfig(method="l1"))

    report = structure_report(system, run_oracles=True)
    assert report.is_z
    assert report.is_l
    assert report.weakly_dd
    assert report.essentially_irreducible
    assert report.essentially_dd
    assert report.m_matrix_by_sufficient_condition
    assert report.m_matrix_by_oracle
    assert report.consistent
    assert report.offending_rows == {}


def test_oracle_beyond_the_sufficient_condition() -> None:
    report = analyze_matrix(np.array([[1.0, -3.0], [0.0, 1.0]]), run_oracles=True)

    assert report.is_l
    assert not report.weakly_dd
    assert not report.m_matrix_by_sufficient_condition
    assert report.m_matrix_by_oracle
    assert report.consistent


def test_oracle_is_skipped_above_the_cap() -> None:
    report = analyze_matrix(poisson_1d(30), run_oracles=True, cap=10)

    assert report.m_matrix_by_oracle is None
    assert report.m_matrix_by_sufficient_condition


def test_singular_z_matrix() -> None:
    report = analyze_matrix(
        np.array([[1.0, -1.0], [-1.0, 1.0]]),
        np.array([], dtype=np.int64),
        run_oracles=True,
    )

    assert report.is_l
    assert not report.essentially_dd
    assert report.inverse_positive_by_oracle is False
    assert report.m_matrix_by_oracle is False


def test_discrete_max_principle() -> None:
    assert discrete_max_principle_check(poisson_1d(20))
    assert not discrete_max_principle_check(sp.csr_matrix([[1.0, 2.0], [0.0, 1.0]]))


def test_export_and_load(tmp_path) -> None:
    domain = _square()
    cloud = generate_cloud(domain).with_boundary_values(dirichlet=_quadratic)
    system = assemble(cloud, StencilConfig(method="l1"), domain=domain)

    paths = export_system(system, tmp_path / "grid")
    assert paths["matrix"].name == "grid.mtx"

    A, rhs, metadata = load_system(tmp_path / "grid")
    assert np.array_equal(A.toarray(), system.A.toarray())
    assert np.array_equal(rhs, system.rhs)
    assert metadata["method"] == "l1"
    assert metadata["dirichlet_rows"] == system.dirichlet_rows().tolist()
    assert metadata["cloud_hash"] == cloud.content_hash()


def test_load_without_side_files(tmp_path) -> None:
    system = assemble(
        generate_cloud(BoxDomain(lower=[0.0], upper=[1.0], spacing=0.25)),
        StencilConfig(method="l1"),
    )
    export_system(system, tmp_path / "line")
    (tmp_path / "line.rhs").unlink()
    (tmp_path / "line.json").unlink()

    A, rhs, metadata = load_system(tmp_path / "line.mtx")
    assert A.shape == (5, 5)
    assert np.array_equal(rhs, np.zeros(5))
    assert metadata == {}
