"""Line-drawing rasterization of meshes and user strokes.

Parts are drawn as occluding contours (front/back facing changes and
boundary edges) plus crease edges above a dihedral threshold, with
hidden lines removed against a triangle z-buffer.  The same canvas
mapping is reused for the session shadow so sketches and renders share
one coordinate frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import TriangleMesh
from .views import ViewDirection

_DEPTH_BIAS_REL = 0.01


@dataclass
class LineImage:
    pixels: np.ndarray  # (size, size) uint8, line = 1
    view: ViewDirection | None = None
    part_id: str | None = None

    def __post_init__(self) -> None:
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError("line images must be square")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def ink_count(self) -> int:
        return int(self.pixels.sum())

    def is_blank(self) -> bool:
        return not self.pixels.any()

    def copy(self) -> "LineImage":
        return LineImage(self.pixels.copy(), self.view, self.part_id)


@dataclass
class CanvasMapping:
    """Orthographic world->pixel mapping shared by renders and sketches."""

    view: ViewDirection
    center2: np.ndarray  # projection-plane center of the fitted content
    scale: float         # pixels per world unit
    size: int

    @classmethod
    def fit(cls, points: np.ndarray, view: ViewDirection, size: int, margin: float = 0.05) -> "CanvasMapping":
        right = view.right()
        p2 = np.stack([points @ right, points @ view.up], axis=1)
        lo = p2.min(axis=0)
        hi = p2.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
        usable = size * (1.0 - 2.0 * margin)
        scale = usable / span if span > 0 else 1.0
        return cls(view, (lo + hi) / 2.0, scale, size)

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project world points to (pixel xy, depth); larger depth = closer."""
        pts = np.atleast_2d(points)
        right = self.view.right()
        x = (pts @ right - self.center2[0]) * self.scale + (self.size - 1) / 2.0
        y = (self.size - 1) / 2.0 - (pts @ self.view.up - self.center2[1]) * self.scale
        depth = pts @ self.view.direction
        return np.stack([x, y], axis=1), depth

    def unproject_offset(self, dx_px: float, dy_px: float) -> np.ndarray:
        """World-space offset for a pixel-space offset (zero depth change)."""
        right = self.view.right()
        return (dx_px / self.scale) * right - (dy_px / self.scale) * self.view.up


def _edge_face_map(triangles: np.ndarray) -> dict[tuple[int, int], list[int]]:
    edges: dict[tuple[int, int], list[int]] = {}
    for f, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append(f)
    return edges


def feature_edges(mesh: TriangleMesh, view: ViewDirection, crease_deg: float) -> np.ndarray:
    """Vertex-index pairs of contour/boundary/crease edges for a view."""
    normals = mesh.face_normals()
    facing = normals @ view.direction
    cos_crease = np.cos(np.deg2rad(crease_deg))
    out: list[tuple[int, int]] = []
    for (u, v), faces in _edge_face_map(mesh.triangles).items():
        if len(faces) == 1:
            out.append((u, v))
            continue
        keep = False
        for i in range(len(faces)):
            for j in range(i + 1, len(faces)):
                fi, fj = faces[i], faces[j]
                if facing[fi] * facing[fj] <= 0.0:
                    keep = True  # occluding contour
                elif float(normals[fi] @ normals[fj]) < cos_crease:
                    keep = True  # crease
        if keep:
            out.append((u, v))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def render_line_drawing(
    mesh: TriangleMesh,
    view: ViewDirection,
    size: int = 320,
    crease_deg: float = 40.0,
    margin: float = 0.05,
    pen: int = 2,
    mapping: CanvasMapping | None = None,
) -> LineImage:
    """Orthographic hidden-line drawing of a mesh (binary, unthinned)."""
    if mesh.n_vertices == 0:
        raise ValueError("cannot render an empty mesh")
    if mapping is None:
        mapping = CanvasMapping.fit(mesh.vertices, view, size, margin)
    xy, depth = mapping.project(mesh.vertices)

    img = np.zeros((size, size), dtype=np.uint8)
    if mesh.n_triangles == 0:
        return LineImage(img, view)
    tri_xy = np.ascontiguousarray(xy[mesh.triangles], dtype=np.float64)
    tri_d = np.ascontiguousarray(depth[mesh.triangles], dtype=np.float64)
    zbuf = kernels.zbuffer_triangles(tri_xy, tri_d, size)

    edges = feature_edges(mesh, view, crease_deg)
    if len(edges) == 0:
        return LineImage(img, view)
    seg_xy = np.ascontiguousarray(xy[edges], dtype=np.float64)
    seg_d = np.ascontiguousarray(depth[edges], dtype=np.float64)
    drange = float(depth.max() - depth.min())
    eps = _DEPTH_BIAS_REL * drange + 1e-12
    kernels.draw_segments(img, zbuf, seg_xy, seg_d, pen, eps)
    return LineImage(img, view)


def visible_edge_polylines(
    mesh: TriangleMesh,
    view: ViewDirection,
    mapping: CanvasMapping,
    crease_deg: float = 40.0,
    samples_per_edge: int = 32,
) -> list[np.ndarray]:
    """Feature edges as pixel-space polylines with hidden runs removed.

    Each feature edge is depth-tested at regular samples against the
    mesh's own z-buffer; maximal visible runs become polylines.  Useful
    for turning a part's contour into stroke input.
    """
    xy, depth = mapping.project(mesh.vertices)
    size = mapping.size
    tri_xy = np.ascontiguousarray(xy[mesh.triangles], dtype=np.float64)
    tri_d = np.ascontiguousarray(depth[mesh.triangles], dtype=np.float64)
    zbuf = kernels.zbuffer_triangles(tri_xy, tri_d, size)
    drange = float(depth.max() - depth.min())
    eps = _DEPTH_BIAS_REL * drange + 1e-12

    out: list[np.ndarray] = []
    for u, v in feature_edges(mesh, view, crease_deg):
        t = np.linspace(0.0, 1.0, samples_per_edge)
        pts = xy[u] + t[:, None] * (xy[v] - xy[u])
        ds = depth[u] + t * (depth[v] - depth[u])
        # same permissive test as the 2px raster pen: a sample is
        # visible when any pixel of its 2x2 stamp passes the depth test
        cols = np.clip(np.floor(pts[:, 0]).astype(np.int64), 0, size - 2)
        rows = np.clip(np.floor(pts[:, 1]).astype(np.int64), 0, size - 2)
        zmin = np.minimum(
            np.minimum(zbuf[rows, cols], zbuf[rows, cols + 1]),
            np.minimum(zbuf[rows + 1, cols], zbuf[rows + 1, cols + 1]),
        )
        visible = zmin <= ds + eps
        run_start = None
        for k in range(samples_per_edge + 1):
            on = k < samples_per_edge and visible[k]
            if on and run_start is None:
                run_start = k
            elif not on and run_start is not None:
                if k - run_start >= 2:
                    out.append(pts[run_start:k].copy())
                run_start = None
    return out


def rasterize_polylines(
    polylines: list[np.ndarray],
    canvas_size: int,
    size: int = 320,
    pen: int = 2,
) -> LineImage:
    """Rasterize stroke polylines (canvas pixel coords) to a binary image."""
    img = np.zeros((size, size), dtype=np.uint8)
    factor = size / canvas_size if canvas_size else 1.0
    segs = []
    for line in polylines:
        pts = np.atleast_2d(np.asarray(line, dtype=np.float64)) * factor
        if len(pts) == 1:
            segs.append(np.stack([pts[0], pts[0]]))
        for k in range(len(pts) - 1):
            segs.append(pts[k : k + 2])
    if not segs:
        return LineImage(img)
    seg_xy = np.ascontiguousarray(np.stack(segs), dtype=np.float64)
    seg_d = np.zeros((len(segs), 2), dtype=np.float64)
    zbuf = np.full((size, size), -np.inf, dtype=np.float64)
    kernels.draw_segments(img, zbuf, seg_xy, seg_d, pen, 0.0)
    return LineImage(img)


def save_line_image_png(img: LineImage, path) -> None:
    """Debug dump as a 1-bit PNG (ink black on white)."""
    from PIL import Image

    Image.fromarray(img.pixels == 0).save(path, format="PNG", bits=1)


def compose_shadow(solid: LineImage | None, faint: LineImage | None, size: int) -> np.ndarray:
    """Grayscale canvas: solid lines black, faint reference lines light."""
    canvas = np.full((size, size), 255, dtype=np.uint8)
    if faint is not None:
        canvas[faint.pixels == 1] = 200
    if solid is not None:
        canvas[solid.pixels == 1] = 0
    return canvas


__all__ = [
    "LineImage",
    "CanvasMapping",
    "render_line_drawing",
    "rasterize_polylines",
    "feature_edges",
    "compose_shadow",
]
