"""Oriented bounding boxes and insertion ratios.

Box axes come from PCA of the surface measure (exact triangle-integral
covariance, i.e. the infinite-sample limit of area-weighted sampling).
Raw PCA is blind for shapes with (near-)isotropic covariance — a cube's
covariance is a multiple of the identity, so its eigenbasis carries no
orientation.  We therefore also build candidate frames from dominant
face-normal clusters and keep whichever frame yields the smallest box.
This is a cheap deterministic refinement, not a minimum-volume search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh

_AXIS_ORTHO_TOL = 1e-6
_NORMAL_CLUSTER_QUANTUM = 1e-3
_MIN_NORMAL_AREA_FRACTION = 0.05
_MAX_NORMAL_CLUSTERS = 6
_EXTENT_FLOOR_REL = 1e-6


@dataclass
class OrientedBoundingBox:
    center: np.ndarray        # (3,)
    axes: np.ndarray          # (3, 3), rows are unit directions
    half_extents: np.ndarray  # (3,), ordered descending
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64)
        self.axes = np.asarray(self.axes, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        gram = self.axes @ self.axes.T
        if not np.allclose(gram, np.eye(3), atol=_AXIS_ORTHO_TOL):
            raise ValueError("OBB axes must be orthonormal")
        if (self.half_extents <= 0).any():
            raise ValueError("OBB extents must be strictly positive")

    @property
    def extents(self) -> np.ndarray:
        """Full (not half) extents."""
        return 2.0 * self.half_extents

    @property
    def diagonal(self) -> float:
        return float(2.0 * np.linalg.norm(self.half_extents))

    def volume(self) -> float:
        return float(np.prod(self.extents))

    def corners(self) -> np.ndarray:
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center + (signs * self.half_extents) @ self.axes

    def support_radius(self, direction: np.ndarray) -> float:
        """Half-width of the box's projection onto a unit direction."""
        return float(np.abs(self.axes @ direction) @ self.half_extents)

    def translated(self, offset: np.ndarray) -> "OrientedBoundingBox":
        return OrientedBoundingBox(
            self.center + offset, self.axes.copy(), self.half_extents.copy(), self.degenerate
        )


@dataclass(frozen=True)
class InsertionRatios:
    rx: float
    ry: float
    rz: float

    def __post_init__(self) -> None:
        for r in (self.rx, self.ry, self.rz):
            if not (-1e-9 <= r <= 1.0 + 1e-9):
                raise ValueError(f"insertion ratio out of [0,1]: {r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz])


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _dominant_normals(mesh: TriangleMesh) -> list[np.ndarray]:
    normals = mesh.face_normals()
    areas = mesh.areas()
    total = areas.sum()
    if total <= 0:
        return []
    buckets: dict[tuple[int, int, int], tuple[float, np.ndarray]] = {}
    for n, a in zip(normals, areas):
        n = _canonical_sign(n)
        key = tuple(np.round(n / _NORMAL_CLUSTER_QUANTUM).astype(np.int64))
        if key in buckets:
            acc_a, acc_n = buckets[key]
            buckets[key] = (acc_a + a, acc_n + a * n)
        else:
            buckets[key] = (a, a * n)
    items = [
        (a, key, vec / np.linalg.norm(vec))
        for key, (a, vec) in buckets.items()
        if a >= _MIN_NORMAL_AREA_FRACTION * total and np.linalg.norm(vec) > 0
    ]
    items.sort(key=lambda it: (-it[0], it[1]))
    return [vec for _, _, vec in items[:_MAX_NORMAL_CLUSTERS]]


def _complete_frame(u: np.ndarray, hint: np.ndarray | None = None) -> np.ndarray:
    if hint is None or abs(float(u @ hint)) > 0.9:
        hint = np.eye(3)[int(np.argmin(np.abs(u)))]
    w = np.cross(u, hint)
    w /= np.linalg.norm(w)
    v = np.cross(w, u)
    return np.stack([u, v, w])


def _candidate_frames(mesh: TriangleMesh, eig_frame: np.ndarray) -> list[np.ndarray]:
    frames = [eig_frame]
    normals = _dominant_normals(mesh)
    for i, ni in enumerate(normals):
        frames.append(_complete_frame(ni))
        for nj in normals[i + 1 :]:
            if abs(float(ni @ nj)) < 0.5:
                frames.append(_complete_frame(ni, nj))
    return frames


def _extents_in_frame(points: np.ndarray, frame: np.ndarray):
    proj = points @ frame.T
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    return (hi - lo) / 2.0, (hi + lo) / 2.0


def compute_obb(mesh: TriangleMesh) -> OrientedBoundingBox:
    """PCA box of the mesh surface with face-normal frame refinement.

    Axes ordered by descending extent; extents cover every vertex and
    are floored at 1e-6 x bbox diagonal (degenerate geometry flagged,
    never rejected).
    """
    if mesh.n_vertices == 0:
        raise ValueError("cannot compute OBB of an empty mesh")
    _, _, cov = mesh.surface_integral_moments()
    _, vecs = np.linalg.eigh(cov)
    eig_frame = vecs.T[::-1].copy()  # rows, descending eigenvalue

    best_frame = eig_frame
    best_half, best_mid = _extents_in_frame(mesh.vertices, eig_frame)
    best_vol = float(np.prod(np.maximum(best_half, 1e-30)))
    for frame in _candidate_frames(mesh, eig_frame)[1:]:
        half, mid = _extents_in_frame(mesh.vertices, frame)
        vol = float(np.prod(np.maximum(half, 1e-30)))
        if vol < best_vol * (1.0 - 1e-9):
            best_frame, best_half, best_mid, best_vol = frame, half, mid, vol

    order = np.argsort(-best_half, kind="stable")
    axes = best_frame[order]
    half = best_half[order]
    mid = best_mid[order]
    axes = np.stack([_canonical_sign(a) for a in axes])
    sign_flips = np.sign(np.einsum("ij,ij->i", axes, best_frame[order]))
    mid = mid * sign_flips
    if np.linalg.det(axes) < 0:
        axes[2] = -axes[2]
        mid[2] = -mid[2]
    center = mid @ axes

    floor = _EXTENT_FLOOR_REL * max(mesh.bbox_diagonal(), 1e-300)
    degenerate = bool((half < floor).any())
    half = np.maximum(half, floor)
    return OrientedBoundingBox(center, axes, half, degenerate)


def points_obb(points: np.ndarray) -> OrientedBoundingBox:
    """PCA box of a raw point set (used for connector cross-sections)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    _, vecs = np.linalg.eigh(cov)
    frame = vecs.T[::-1].copy()
    half, mid = _extents_in_frame(pts, frame)
    order = np.argsort(-half, kind="stable")
    axes = frame[order]
    half = half[order]
    mid = mid[order]
    spread = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    floor = _EXTENT_FLOOR_REL * max(spread, 1e-12)
    degenerate = bool((half < floor).any())
    half = np.maximum(half, floor)
    return OrientedBoundingBox(mid @ axes, axes, half, degenerate)


def insertion_ratios(bp: OrientedBoundingBox, bq: OrientedBoundingBox) -> InsertionRatios:
    """Per-axis penetration depth of ``bp`` into ``bq`` over ``bq``'s extents.

    Depths are interval overlaps along ``bq``'s axes, clamped to
    [0, extent].  A zero overlap on any axis means the boxes do not
    interpenetrate at all, so disjoint and merely touching boxes yield
    all-zero ratios.
    """
    ratios = []
    rel = bp.center - bq.center
    for i in range(3):
        axis = bq.axes[i]
        extent = 2.0 * bq.half_extents[i]
        cp = float(rel @ axis)
        rp = bp.support_radius(axis)
        lo = max(cp - rp, -bq.half_extents[i])
        hi = min(cp + rp, bq.half_extents[i])
        depth = min(max(hi - lo, 0.0), extent)
        if depth <= 0.0:
            return InsertionRatios(0.0, 0.0, 0.0)
        ratios.append(float(depth / extent))
    return InsertionRatios(*ratios)


__all__ = [
    "OrientedBoundingBox",
    "InsertionRatios",
    "compute_obb",
    "points_obb",
    "insertion_ratios",
]
