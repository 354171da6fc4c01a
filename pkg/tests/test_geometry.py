import numpy as np
import pytest

import potkit as pk
from potkit.geometry import field_from_csv, field_to_csv, grid_from_json, grid_to_json, mesh_from_csv, mesh_to_csv


def test_unit_cube_grid_counts():
    g = pk.build_grid(pk.Box([0, 0, 0], [1, 1, 1]), 0.25, 0.0)
    assert g.dims == (5, 5, 5)
    assert g.n_interior == 27  # the 3x3x3 core of nodes strictly inside


def test_too_coarse_ball_raises():
    with pytest.raises(pk.DomainTooSmall):
        pk.build_grid(pk.Ball([0, 0, 0], 1.0), 2.5, 0.0)


def test_ball_interior_count_matches_enumeration():
    # independent oracle: lattice points k with |k|^2 < (r/h)^2 in integers
    g = pk.build_grid(pk.Ball([0, 0, 0], 1.0), 0.1, 0.0)
    ks = np.arange(-10, 11)
    kx, ky, kz = np.meshgrid(ks, ks, ks, indexing="ij")
    expected = int(((kx**2 + ky**2 + kz**2) < 100).sum())
    assert g.n_interior == expected


def test_mask_partition_and_invariants():
    for domain in (pk.Box([0, 0, 0], [1, 1, 1]), pk.Ball([0.1, -0.2, 0.0], 0.9)):
        g = pk.build_grid(domain, 0.11, 0.2)
        counts = [np.count_nonzero(g.mask == label) for label in (pk.INTERIOR, pk.BOUNDARY, pk.EXTERIOR)]
        assert sum(counts) == g.n_nodes
        interior = g.mask == pk.INTERIOR
        # every interior node has 6 in-grid neighbors
        idx = np.argwhere(interior)
        assert idx[:, 0].min() > 0 and idx[:, 1].min() > 0 and idx[:, 2].min() > 0
        assert (idx < np.array(g.dims) - 1).all()
        # boundary nodes are exactly the non-interior nodes 6-adjacent to interior
        adj = np.zeros(g.dims, dtype=bool)
        adj[1:] |= interior[:-1]
        adj[:-1] |= interior[1:]
        adj[:, 1:] |= interior[:, :-1]
        adj[:, :-1] |= interior[:, 1:]
        adj[:, :, 1:] |= interior[:, :, :-1]
        adj[:, :, :-1] |= interior[:, :, 1:]
        assert np.array_equal(g.mask == pk.BOUNDARY, adj & ~interior)


def test_domain_validation():
    with pytest.raises(ValueError):
        pk.Box([0, 0, 0], [1, -1, 1])
    with pytest.raises(ValueError):
        pk.Ball([0, 0, 0], 0.0)
    with pytest.raises(ValueError):
        pk.build_grid(pk.Box([0, 0, 0], [1, 1, 1]), -0.1)
    with pytest.raises(ValueError):
        pk.build_grid(pk.Box([0, 0, 0], [1, 1, 1]), 0.1, padding=-1.0)


def test_unit_cube_panelization():
    mesh = pk.panelize(pk.Box([0, 0, 0], [1, 1, 1]), 1)
    assert mesh.n_panels == 6
    assert mesh.total_area == pytest.approx(6.0, abs=1e-14)
    # normals are the signed axis vectors
    assert sorted(tuple(n) for n in mesh.normals) == sorted(
        [(-1.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, -1.0, 0.0),
         (0.0, 1.0, 0.0), (0.0, 0.0, -1.0), (0.0, 0.0, 1.0)]
    )


@pytest.mark.parametrize("radius,expected", [(1.0, 4 * np.pi), (2.0, 16 * np.pi)])
def test_sphere_area(radius, expected):
    mesh = pk.panelize(pk.Ball([0, 0, 0], radius), 40)
    assert abs(mesh.total_area - expected) / expected < 1e-12  # bands are area-exact


def test_sphere_area_regression_bound():
    # area-exact band construction: |sum - 4 pi r^2| / 4 pi r^2 <= C / n with C
    # pinned at the rounding floor
    for n in (5, 20, 80):
        mesh = pk.panelize(pk.Ball([0.3, 0.0, -0.2], 1.7), n)
        rel = abs(mesh.total_area - 4 * np.pi * 1.7**2) / (4 * np.pi * 1.7**2)
        assert rel <= 1e-12 / n + 1e-13


def test_sphere_normals_point_outward():
    center = np.array([0.5, -1.0, 2.0])
    mesh = pk.panelize(pk.Ball(center, 1.3), 12)
    assert np.all(np.einsum("ij,ij->i", mesh.normals, mesh.centroids - center) > 0)
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-12)


def test_normal_probe_points():
    mesh = pk.SurfaceMesh([[1, 0, 0]], [0.1], [[1, 0, 0]])
    outside, inside = pk.normal_probe_points(mesh, 0.1)
    assert np.allclose(outside, [[1.1, 0, 0]])
    assert np.allclose(inside, [[0.9, 0, 0]])
    cube_face = pk.SurfaceMesh([[0.5, 0.5, 1.0]], [1.0], [[0, 0, 1]])
    out2, _ = pk.normal_probe_points(cube_face, 0.05)
    assert np.allclose(out2, [[0.5, 0.5, 1.05]])
    with pytest.raises(ValueError):
        pk.normal_probe_points(mesh, 0.0)


def test_scalar_field_interp_trilinear():
    g = pk.build_grid(pk.Box([0, 0, 0], [1, 1, 1]), 0.25, 0.0)
    f = pk.ScalarField.from_function(g, lambda x, y, z: 2 * x - 3 * y + z + 0.5)
    pts = np.array([[0.1, 0.7, 0.33], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    exact = 2 * pts[:, 0] - 3 * pts[:, 1] + pts[:, 2] + 0.5
    assert np.allclose(f.interp(pts), exact, atol=1e-13)  # trilinear is exact on linears
    with pytest.raises(ValueError):
        f.interp(np.array([[2.0, 0.0, 0.0]]))


def test_grid_and_field_roundtrip(tmp_path):
    g = pk.build_grid(pk.Ball([0, 0, 0], 1.0), 0.4, 0.1)
    grid_to_json(g, tmp_path / "grid.json")
    g2 = grid_from_json(tmp_path / "grid.json")
    assert g.same_layout(g2)
    f = pk.ScalarField.from_function(g, lambda x, y, z: x * y + z)
    field_to_csv(f, tmp_path / "f.csv")
    f2 = field_from_csv(g2, tmp_path / "f.csv")
    assert np.array_equal(f.values, f2.values)


def test_mesh_roundtrip(tmp_path):
    mesh = pk.panelize(pk.Ball([0.2, 0.0, 0.0], 1.5), 7)
    mesh_to_csv(mesh, tmp_path / "mesh.csv")
    m2 = mesh_from_csv(tmp_path / "mesh.csv")
    assert np.array_equal(mesh.centroids, m2.centroids)
    assert np.array_equal(mesh.areas, m2.areas)
    assert np.array_equal(mesh.normals, m2.normals)
