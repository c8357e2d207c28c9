"""Triangle meshes: OBJ I/O, surface sampling, distances.

Meshes are plain numpy payloads: float64 vertices (n, 3) and int32
triangle indices (m, 3).  Polygon faces are fan-triangulated on load and
zero-area triangles dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DatasetError

_DEGENERATE_REL_AREA = 1e-14


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise DatasetError("triangle index out of range")
        if self.triangles.size and self.triangles.min() < 0:
            raise DatasetError("negative triangle index")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """Triangle corner positions, shape (m, 3, 3)."""
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        c = self.corners()
        cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self) -> float:
        return float(self.areas().sum())

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def face_normals(self) -> np.ndarray:
        c = self.corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        norm[norm == 0] = 1.0
        return n / norm

    def transformed(self, matrix: np.ndarray) -> "TriangleMesh":
        """Apply a 4x4 affine transform, returning a new mesh."""
        m = np.asarray(matrix, dtype=np.float64)
        v = self.vertices @ m[:3, :3].T + m[:3, 3]
        return TriangleMesh(v, self.triangles.copy())

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.triangles.copy())

    def sample_surface(self, count: int, seed: int = 0) -> np.ndarray:
        """Area-weighted random points on the surface (count, 3)."""
        if self.n_triangles == 0:
            idx = np.random.default_rng(seed).integers(0, self.n_vertices, count)
            return self.vertices[idx]
        rng = np.random.default_rng(seed)
        areas = self.areas()
        total = areas.sum()
        if total <= 0:
            idx = rng.integers(0, self.n_vertices, count)
            return self.vertices[idx]
        tri_idx = rng.choice(self.n_triangles, size=count, p=areas / total)
        u = rng.random(count)
        v = rng.random(count)
        flip = u + v > 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        c = self.corners()[tri_idx]
        return c[:, 0] + u[:, None] * (c[:, 1] - c[:, 0]) + v[:, None] * (c[:, 2] - c[:, 0])

    def distance_to_surface(self, points: np.ndarray) -> np.ndarray:
        """Exact distance from each query point to the mesh surface."""
        return self.closest_on_surface(points)[0]

    def closest_on_surface(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(distance, closest surface point) for each query point."""
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        if self.n_triangles == 0:
            diff = pts[:, None, :] - self.vertices[None, :, :]
            d2 = (diff**2).sum(axis=2)
            idx = d2.argmin(axis=1)
            return np.sqrt(d2[np.arange(len(pts)), idx]), self.vertices[idx]
        tris = np.ascontiguousarray(self.corners(), dtype=np.float64)
        out = kernels.closest_point_tris(pts, tris)
        return out[:, 0], out[:, 1:4]

    def surface_integral_moments(self) -> tuple[float, np.ndarray, np.ndarray]:
        """Exact (area, mean, covariance) of the uniform surface measure."""
        areas = self.areas()
        total = float(areas.sum())
        if total <= 0 or self.n_triangles == 0:
            mean = self.vertices.mean(axis=0)
            centered = self.vertices - mean
            cov = centered.T @ centered / max(1, self.n_vertices)
            return 0.0, mean, cov
        c = self.corners()
        centroids = c.mean(axis=1)
        mean = (areas[:, None] * centroids).sum(axis=0) / total
        # second moment of a triangle: A/12 * (sum v_i v_i^T + s s^T), s = v1+v2+v3
        s = c.sum(axis=1)
        vv = np.einsum("mki,mkj->mij", c, c)
        ss = np.einsum("mi,mj->mij", s, s)
        second = ((vv + ss) * (areas / 12.0)[:, None, None]).sum(axis=0) / total
        cov = second - np.outer(mean, mean)
        return total, mean, cov


def _clean(vertices: np.ndarray, triangles: np.ndarray) -> TriangleMesh:
    mesh = TriangleMesh(vertices, triangles)
    if mesh.n_triangles == 0:
        return mesh
    areas = mesh.areas()
    scale = mesh.bbox_diagonal() ** 2
    keep = areas > _DEGENERATE_REL_AREA * max(scale, 1e-300)
    if not keep.all():
        mesh = TriangleMesh(mesh.vertices, mesh.triangles[keep])
    return mesh


def load_obj(path: str | Path) -> TriangleMesh:
    """Parse an ASCII OBJ file; polygons are fan-triangulated."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"mesh file not found: {path}")
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "v":
            if len(tokens) < 4:
                raise DatasetError(f"{path}:{line_no}: malformed vertex")
            vertices.append([float(tokens[1]), float(tokens[2]), float(tokens[3])])
        elif tokens[0] == "f":
            idx = []
            for tok in tokens[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            if len(idx) < 3:
                raise DatasetError(f"{path}:{line_no}: face with <3 vertices")
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        # vn/vt/g/o/usemtl lines are ignored
    if not vertices:
        raise DatasetError(f"{path}: no vertices")
    return _clean(
        np.array(vertices, dtype=np.float64),
        np.array(faces, dtype=np.int32).reshape(-1, 3),
    )


def obj_document(groups: list[tuple[str, TriangleMesh]]) -> str:
    """Serialize meshes as one OBJ document with a named group per entry."""
    lines: list[str] = ["# partsketch export"]
    offset = 1
    for name, mesh in groups:
        lines.append(f"g {name}")
        for v in mesh.vertices:
            lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
        for t in mesh.triangles:
            lines.append(f"f {t[0] + offset} {t[1] + offset} {t[2] + offset}")
        offset += mesh.n_vertices
    return "\n".join(lines) + "\n"


def save_obj(path: str | Path, groups: list[tuple[str, TriangleMesh]]) -> None:
    Path(path).write_text(obj_document(groups))


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += m.n_vertices
    return TriangleMesh(np.vstack(verts), np.vstack(tris))


__all__ = ["TriangleMesh", "load_obj", "save_obj", "obj_document", "merge_meshes"]
