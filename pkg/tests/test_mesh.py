import numpy as np
import pytest

from partsketch.datagen import box_mesh, cylinder_mesh
from partsketch.errors import DatasetError
from partsketch.mesh import TriangleMesh, load_obj, merge_meshes, obj_document, save_obj


def test_load_obj_triangulates_quads(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    )
    mesh = load_obj(p)
    assert mesh.n_vertices == 4
    assert mesh.n_triangles == 2
    assert mesh.area() == pytest.approx(1.0)


def test_load_obj_negative_indices_and_slashes(tmp_path):
    p = tmp_path / "neg.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3/1 -2/2 -1/3\n")
    mesh = load_obj(p)
    assert mesh.n_triangles == 1


def test_load_obj_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_obj(tmp_path / "nope.obj")


def test_degenerate_triangles_dropped(tmp_path):
    p = tmp_path / "degen.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n"  # second is collinear
    )
    mesh = load_obj(p)
    assert mesh.n_triangles == 1


def test_sampling_is_seeded_and_area_weighted():
    mesh = box_mesh([0, 0, 0], [4.0, 1.0, 0.001])  # dominant faces are z-normal
    a = mesh.sample_surface(2000, seed=3)
    b = mesh.sample_surface(2000, seed=3)
    assert np.array_equal(a, b)
    c = mesh.sample_surface(2000, seed=4)
    assert not np.array_equal(a, c)
    # nearly all samples should sit on the two big faces
    on_big = np.abs(np.abs(a[:, 2]) - 0.0005) < 1e-9
    assert on_big.mean() > 0.95


def test_distance_to_surface_exact():
    mesh = box_mesh([0, 0, 0], [2.0, 2.0, 2.0])
    pts = np.array([[0, 0, 3.0], [0, 0, 0.0], [2.0, 2.0, 2.0]])
    d = mesh.distance_to_surface(pts)
    assert d[0] == pytest.approx(2.0, abs=1e-12)
    assert d[1] == pytest.approx(1.0, abs=1e-12)
    assert d[2] == pytest.approx(np.sqrt(3.0), abs=1e-12)


def test_closest_on_surface_returns_points():
    mesh = box_mesh([0, 0, 0], [2.0, 2.0, 2.0])
    d, q = mesh.closest_on_surface(np.array([[0.2, -0.1, 5.0]]))
    assert d[0] == pytest.approx(4.0, abs=1e-12)
    assert np.allclose(q[0], [0.2, -0.1, 1.0], atol=1e-12)


def test_obj_document_groups_and_roundtrip(tmp_path):
    a = box_mesh([0, 0, 0], [1, 1, 1])
    b = cylinder_mesh([0, 0, 0], [0, 0, 1], 0.3)
    doc = obj_document([("partA", a), ("partB", b)])
    assert doc.count("g ") == 2
    path = tmp_path / "out.obj"
    save_obj(path, [("partA", a), ("partB", b)])
    merged = load_obj(path)
    assert merged.n_vertices == a.n_vertices + b.n_vertices


def test_surface_integral_moments_match_monte_carlo():
    mesh = cylinder_mesh([0, 0, 0], [0, 0, 2.0], 0.5, segments=24)
    _, mean, cov = mesh.surface_integral_moments()
    pts = mesh.sample_surface(200000, seed=0)
    assert np.allclose(mean, pts.mean(axis=0), atol=5e-3)
    centered = pts - pts.mean(axis=0)
    mc_cov = centered.T @ centered / len(pts)
    assert np.allclose(cov, mc_cov, atol=5e-3)


def test_index_validation():
    with pytest.raises(DatasetError):
        TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))
    with pytest.raises(DatasetError):
        TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, -2]]))


def test_merge_meshes_offsets():
    a = box_mesh([0, 0, 0], [1, 1, 1])
    m = merge_meshes([a, a])
    assert m.n_vertices == 2 * a.n_vertices
    assert m.triangles.max() == 2 * a.n_vertices - 1
