"""Offline contextual analysis of segmented models.

Everything the assembly stage needs is derived here once per dataset:
reflection symmetry (global, inter-part, self), contact point clusters
between adjacent parts, per-pair insertion ratios, and connector
smoothness.
"""

from __future__ import annotations

import logging
import zlib

import numpy as np
from scipy.spatial import cKDTree

from .config import AnalysisThresholds
from .mesh import TriangleMesh
from .obb import OrientedBoundingBox, points_obb
from .transforms import Plane

log = logging.getLogger(__name__)


def stable_seed(tag: str, base: int = 0) -> int:
    return (zlib.crc32(tag.encode()) + base) % (2**32)


def reflection_distance(samples: np.ndarray, surface: TriangleMesh, plane: Plane) -> float:
    """Mean distance from the reflected sample set to the surface."""
    reflected = plane.reflect_points(samples)
    return float(surface.distance_to_surface(reflected).mean())


def detect_global_symmetry(
    merged: TriangleMesh,
    obb: OrientedBoundingBox,
    thresholds: AnalysisThresholds,
    seed_tag: str = "",
) -> Plane | None:
    """Best reflection plane through the OBB center with an OBB-axis normal.

    Returns the plane minimizing mean reflection distance when that
    distance is below tau_sym x bbox diagonal, else None.
    """
    samples = merged.sample_surface(thresholds.sample_count, stable_seed(seed_tag, thresholds.seed))
    best: tuple[float, Plane] | None = None
    for axis in obb.axes:
        plane = Plane(obb.center, axis)
        d = reflection_distance(samples, merged, plane)
        if best is None or d < best[0]:
            best = (d, plane)
    assert best is not None
    tau = thresholds.tau_sym * merged.bbox_diagonal()
    return best[1] if best[0] < tau else None


def detect_inter_part_symmetry(
    part_ids: list[str],
    part_meshes: dict[str, TriangleMesh],
    plane: Plane,
    diag: float,
    thresholds: AnalysisThresholds,
) -> tuple[list[tuple[str, str]], set[str]]:
    """Mirror pairs across ``plane`` plus parts mapped onto themselves.

    A pair (a, b) is recorded when reflecting a lands on b and vice
    versa (mutual best match under tau_sym); a part whose reflection
    lands on itself is flagged self-symmetric.
    """
    tau = thresholds.tau_sym * diag
    n_samples = max(256, thresholds.sample_count // 8)
    samples = {
        pid: part_meshes[pid].sample_surface(n_samples, stable_seed(pid, thresholds.seed))
        for pid in part_ids
    }
    best: dict[str, tuple[str, float]] = {}
    for pid in part_ids:
        reflected = plane.reflect_points(samples[pid])
        scores = []
        for other in part_ids:
            d = float(part_meshes[other].distance_to_surface(reflected).mean())
            scores.append((d, other))
        d, other = min(scores)
        if d < tau:
            best[pid] = (other, d)

    self_symmetric = {pid for pid, (other, _) in best.items() if other == pid}
    pairs: list[tuple[str, str]] = []
    for pid, (other, _) in best.items():
        if other == pid or pid >= other:
            continue
        if best.get(other, (None,))[0] == pid:
            pairs.append((pid, other))
    return pairs, self_symmetric


def detect_contacts(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    eps: float,
    seed_a: int,
    seed_b: int,
    n_samples: int,
) -> list[np.ndarray]:
    """Clustered contact points between two touching surfaces.

    Midpoints of sample/closest-surface pairs with gap < eps are
    single-linkage clustered; cluster centroids are the contacts.
    """
    mids = []
    for src, dst, seed in ((mesh_a, mesh_b, seed_a), (mesh_b, mesh_a, seed_b)):
        pts = np.vstack([src.sample_surface(n_samples, seed), src.vertices])
        dist, closest = dst.closest_on_surface(pts)
        near = dist < eps
        if near.any():
            mids.append((pts[near] + closest[near]) / 2.0)
    if not mids:
        return []
    mids_arr = np.vstack(mids)

    area = max(mesh_a.area() + mesh_b.area(), 1e-300)
    spacing = np.sqrt(area / max(1, 2 * n_samples))
    radius = max(4.0 * eps, 3.0 * spacing)
    tree = cKDTree(mids_arr)
    n = len(mids_arr)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(radius):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    # medoid, not mean: a ring-shaped contact region must not collapse
    # to a point off the surface
    contacts = []
    for idx in clusters.values():
        pts = mids_arr[idx]
        mean = pts.mean(axis=0)
        contacts.append(pts[int(np.linalg.norm(pts - mean, axis=1).argmin())])
    contacts.sort(key=lambda p: (p[0], p[1], p[2]))
    return contacts


def connector_region(
    mesh: TriangleMesh, contacts: list[np.ndarray], radius: float, seed: int, n_samples: int
) -> np.ndarray:
    """Surface points of ``mesh`` within ``radius`` of any contact."""
    pts = np.vstack([mesh.sample_surface(n_samples, seed), mesh.vertices])
    contact_arr = np.asarray(contacts, dtype=np.float64).reshape(-1, 3)
    d = np.linalg.norm(pts[:, None, :] - contact_arr[None, :, :], axis=2).min(axis=1)
    return pts[d < radius]


def connector_smoothness(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    contacts: list[np.ndarray],
    radius: float,
    band: float,
    seed_a: int = 0,
    seed_b: int = 1,
    n_samples: int = 4096,
) -> bool:
    """True when the two connector cross-sections have matching sizes.

    Each contact cluster is checked independently: the cross-section
    extents (two largest point-OBB extents of the region within
    ``radius`` of the cluster) must agree within ``band`` relative
    difference on both sides.  Missing contacts give False.
    """
    if not contacts:
        return False
    pts_a = np.vstack([mesh_a.sample_surface(n_samples, seed_a), mesh_a.vertices])
    pts_b = np.vstack([mesh_b.sample_surface(n_samples, seed_b), mesh_b.vertices])
    for contact in contacts:
        c = np.asarray(contact, dtype=np.float64)
        region_a = pts_a[np.linalg.norm(pts_a - c, axis=1) < radius]
        region_b = pts_b[np.linalg.norm(pts_b - c, axis=1) < radius]
        if len(region_a) < 4 or len(region_b) < 4:
            return False
        ext_a = points_obb(region_a).extents[:2]
        ext_b = points_obb(region_b).extents[:2]
        rel = np.abs(ext_a - ext_b) / np.maximum(np.maximum(ext_a, ext_b), 1e-300)
        if not (rel <= band).all():
            return False
    return True


__all__ = [
    "detect_global_symmetry",
    "detect_inter_part_symmetry",
    "detect_contacts",
    "connector_smoothness",
    "connector_region",
    "reflection_distance",
    "stable_seed",
]
