import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partsketch.datagen import box_mesh
from partsketch.mesh import TriangleMesh
from partsketch.obb import (
    InsertionRatios,
    OrientedBoundingBox,
    compute_obb,
    insertion_ratios,
)


def rot_z(deg):
    a = np.deg2rad(deg)
    return np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])


def test_unit_cube_obb():
    obb = compute_obb(box_mesh([0.5, 0.5, 0.5], [1, 1, 1]))
    assert np.allclose(obb.center, [0.5, 0.5, 0.5], atol=1e-9)
    assert np.allclose(obb.half_extents, [0.5, 0.5, 0.5], atol=1e-9)


def test_rotated_cube_same_extents():
    cube = box_mesh([0.5, 0.5, 0.5], [1, 1, 1])
    rotated = TriangleMesh(cube.vertices @ rot_z(30).T, cube.triangles)
    obb = compute_obb(rotated)
    assert np.allclose(np.sort(obb.half_extents), [0.5, 0.5, 0.5], atol=1e-9)
    # axes rotated: one axis should align with the rotated x direction
    rx = rot_z(30) @ np.array([1.0, 0, 0])
    dots = np.abs(obb.axes @ rx)
    assert dots.max() > 1 - 1e-9


def test_slab_shortest_axis_normal():
    slab = box_mesh([0, 0, 0], [1.0, 1.0, 0.1])
    obb = compute_obb(slab)
    angle = np.degrees(np.arccos(min(1.0, abs(float(obb.axes[2] @ [0, 0, 1.0])))))
    assert angle < 1.0


def test_extent_ordering_and_orthonormality():
    slab = box_mesh([3, -1, 2], [2.0, 1.0, 0.25])
    obb = compute_obb(slab)
    assert obb.half_extents[0] >= obb.half_extents[1] >= obb.half_extents[2]
    assert np.allclose(obb.axes @ obb.axes.T, np.eye(3), atol=1e-9)
    assert np.linalg.det(obb.axes) > 0


def test_degenerate_geometry_floored():
    # all-coplanar triangle pair
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    t = np.array([[0, 1, 2], [1, 3, 2]])
    obb = compute_obb(TriangleMesh(v, t))
    assert obb.degenerate
    assert (obb.half_extents > 0).all()


def test_monotonicity_added_outside_vertex():
    rng = np.random.default_rng(0)
    for _ in range(20):
        mesh = box_mesh(rng.normal(size=3), rng.uniform(0.5, 2.0, size=3))
        obb = compute_obb(mesh)
        outside = obb.center + obb.axes[0] * (obb.half_extents[0] * 2.0)
        grown = TriangleMesh(np.vstack([mesh.vertices, outside]), mesh.triangles)
        obb2 = compute_obb(grown)
        assert (obb2.half_extents > obb.half_extents - 1e-12).all()
        assert (obb2.half_extents - obb.half_extents).max() > 1e-9


def make_box(center, axes, half):
    return OrientedBoundingBox(np.asarray(center, float), axes, np.asarray(half, float))


def test_insertion_ratio_examples():
    eye = np.eye(3)
    bq = make_box([0, 0, 0], eye, [0.5, 0.5, 0.5])
    assert insertion_ratios(bq, bq).as_array() == pytest.approx([1, 1, 1])

    bp_out = make_box([5, 0, 0], eye, [0.5, 0.5, 0.5])
    assert insertion_ratios(bp_out, bq).as_array() == pytest.approx([0, 0, 0])

    bp_shift = make_box([0.75, 0, 0], eye, [0.5, 0.5, 0.5])
    assert insertion_ratios(bp_shift, bq).as_array() == pytest.approx([0.25, 1.0, 1.0])


def test_insertion_ratio_self_is_unity_property():
    rng = np.random.default_rng(1)
    for _ in range(30):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[2] = -q[2]
        box = make_box(rng.normal(size=3), q, rng.uniform(0.1, 3.0, size=3))
        assert insertion_ratios(box, box).as_array() == pytest.approx([1, 1, 1], abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_insertion_ratio_rigid_invariance(seed):
    rng = np.random.default_rng(seed)
    qa, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    qb, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    bp = make_box(rng.normal(size=3), qa, rng.uniform(0.2, 2.0, size=3))
    bq = make_box(rng.normal(size=3), qb, rng.uniform(0.2, 2.0, size=3))
    base = insertion_ratios(bp, bq).as_array()

    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = rng.normal(size=3) * 5
    moved_p = make_box(rot @ bp.center + shift, bp.axes @ rot.T, bp.half_extents)
    moved_q = make_box(rot @ bq.center + shift, bq.axes @ rot.T, bq.half_extents)
    moved = insertion_ratios(moved_p, moved_q).as_array()
    assert np.allclose(base, moved, atol=1e-6)


def test_invalid_boxes_rejected():
    with pytest.raises(ValueError):
        make_box([0, 0, 0], np.ones((3, 3)), [1, 1, 1])
    with pytest.raises(ValueError):
        make_box([0, 0, 0], np.eye(3), [1, 0, 1])
    with pytest.raises(ValueError):
        InsertionRatios(0.5, 1.2, 0.0)


def test_support_radius():
    box = make_box([0, 0, 0], np.eye(3), [2, 1, 0.5])
    assert box.support_radius(np.array([1.0, 0, 0])) == pytest.approx(2.0)
    d = np.array([1.0, 1.0, 0]) / np.sqrt(2)
    assert box.support_radius(d) == pytest.approx(3 / np.sqrt(2))
