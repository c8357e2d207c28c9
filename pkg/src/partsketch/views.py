"""View sampling on the sphere and per-category common views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .obb import OrientedBoundingBox

_WORLD_UP = np.array([0.0, 0.0, 1.0])
_WORLD_ALT = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ViewDirection:
    """Unit direction from the model toward the viewer, plus an up vector."""

    direction: np.ndarray
    up: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValueError("view direction must be nonzero")
        d = d / norm
        u = np.asarray(self.up, dtype=np.float64)
        u = u - (u @ d) * d
        un = np.linalg.norm(u)
        if un < 1e-12:
            raise ValueError("up vector parallel to view direction")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "up", u / un)

    def right(self) -> np.ndarray:
        return np.cross(self.up, self.direction)


def canonical_up(direction: np.ndarray) -> np.ndarray:
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    ref = _WORLD_UP if abs(float(d @ _WORLD_UP)) < 0.999 else _WORLD_ALT
    u = ref - (ref @ d) * d
    return u / np.linalg.norm(u)


def make_view(direction: np.ndarray) -> ViewDirection:
    return ViewDirection(direction, canonical_up(direction))


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    return verts, faces


def sample_viewpoints(level: int) -> list[ViewDirection]:
    """Icosphere vertex directions: 12, 42, 162, ... for level 0, 1, 2, ...

    Deterministic: directions sorted lexicographically, each with a
    canonical up vector.
    """
    if level < 0:
        raise ValueError("subdivision level must be >= 0")
    verts, faces = _icosahedron()
    vert_list = [tuple(v) for v in verts]
    index = {tuple(np.round(v, 12)): i for i, v in enumerate(verts)}

    def midpoint(i: int, j: int) -> int:
        m = np.array(vert_list[i]) + np.array(vert_list[j])
        m /= np.linalg.norm(m)
        key = tuple(np.round(m, 12))
        if key not in index:
            index[key] = len(vert_list)
            vert_list.append(tuple(m))
        return index[key]

    for _ in range(level):
        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new_faces, dtype=np.int64)

    dirs = np.array(vert_list)
    order = np.lexsort((dirs[:, 2], dirs[:, 1], dirs[:, 0]))
    return [make_view(d) for d in dirs[order]]


def common_view(obbs: list[OrientedBoundingBox]) -> ViewDirection:
    """Direction of the smallest axis of the component-wise averaged box.

    Axes are sign-aligned to the first box before averaging; callers
    compare contours from both orientations (+/- the returned
    direction).
    """
    if not obbs:
        raise ValueError("common_view requires at least one box")
    ref = obbs[0].axes
    sum_axes = np.zeros((3, 3))
    sum_half = np.zeros(3)
    for obb in obbs:
        for i in range(3):
            a = obb.axes[i]
            if float(a @ ref[i]) < 0:
                a = -a
            sum_axes[i] += a
        sum_half += obb.half_extents
    avg_half = sum_half / len(obbs)
    k = int(np.argmin(avg_half))
    d = sum_axes[k]
    norm = np.linalg.norm(d)
    d = ref[k] if norm < 1e-9 else d / norm
    return make_view(d)


__all__ = ["ViewDirection", "sample_viewpoints", "common_view", "make_view", "canonical_up"]
