"""Part assembly: sketch fitting, placement rules, snapping, stitching.

Placement follows three rules derived from the source models: insertion
ratios between neighbor boxes are preserved axis by axis (R1), parts
whose source pair is center-aligned get their reflection planes
re-aligned (R2), and symmetric counterparts are placed automatically by
reflection (R3).  Contacts are then snapped with a clustered
shape-matching deformation and seams stitched with smoothness-aware
scaling plus vertex welding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Part, PartDatabase, SegmentedModel
from .mesh import TriangleMesh
from .obb import OrientedBoundingBox, points_obb
from .render import CanvasMapping
from .transforms import Plane, apply_affine, scale_in_frame, translation
from .views import ViewDirection

log = logging.getLogger(__name__)

SNAP_MAX_ITER = 200
SNAP_STIFFNESS = 0.85        # cluster-rigidity weight vs rest anchor
SNAP_CLUSTER_TARGET = 500    # vertices per cluster before adding more
SNAP_LOCALITY = 1.5          # max vertex displacement / max handle displacement
_PLANE_ALIGN_COS = np.cos(np.deg2rad(10.0))


@dataclass
class PlacedPart:
    part: Part
    transform: np.ndarray                 # 4x4 source -> world
    mesh: TriangleMesh                    # current world mesh (may be deformed)
    obb: OrientedBoundingBox
    order: int = 0
    mirrored_from: str | None = None
    fallback: bool = False
    clamped_axes: tuple[int, ...] = ()

    @property
    def category(self) -> str:
        return self.part.category

    def world_plane(self) -> Plane | None:
        if self.part.reflection_plane is None:
            return None
        return self.part.reflection_plane.transformed(self.transform)

    def world_contacts_for_category(self, model: SegmentedModel, category: str) -> list[np.ndarray]:
        pts = []
        for c in self.part.contacts:
            try:
                if model.part(c.neighbor_id).category == category:
                    pts.append(apply_affine(self.transform, c.position)[0])
            except KeyError:
                continue
        return pts


@dataclass
class AssemblyState:
    reference: SegmentedModel
    viewpoint: ViewDirection
    global_plane: Plane | None = None
    placed: list[PlacedPart] = field(default_factory=list)
    _counter: int = 0

    def __post_init__(self) -> None:
        if self.global_plane is None:
            self.global_plane = self.reference.global_plane

    def add(self, placed: PlacedPart) -> None:
        if np.linalg.det(placed.transform[:3, :3]) <= 0:
            raise ValueError("placement transform must have positive determinant")
        placed.order = self._counter
        self._counter += 1
        self.placed.append(placed)

    def remove_category(self, category: str) -> None:
        self.placed = [p for p in self.placed if p.category != category]

    def by_category(self, category: str) -> list[PlacedPart]:
        return [p for p in self.placed if p.category == category]

    def categories(self) -> set[str]:
        return {p.category for p in self.placed}

    def open_slots(self, db: PartDatabase) -> list[str]:
        filled = self.categories()
        if not filled:
            return sorted({p.category for p in self.reference.parts})
        slots: set[str] = set()
        for cat in filled:
            slots |= db.category_neighbors(cat)
        return sorted(slots - filled)


# --- sketch fit -----------------------------------------------------------


def fit_to_sketch(
    mesh: TriangleMesh,
    stroke_points: np.ndarray,
    mapping: CanvasMapping,
) -> np.ndarray:
    """Anisotropic transform fitting the part's projected bbox to the strokes.

    Image-plane scales come from the stroke/projection bounding-box
    ratio; the view-axis scale is their geometric mean, and the
    translation aligns bbox centers with no depth component.  Blank
    strokes give the identity (with a warning).
    """
    pts = np.atleast_2d(np.asarray(stroke_points, dtype=np.float64))
    if pts.size == 0:
        log.warning("blank strokes: returning identity fit")
        return np.eye(4)
    proj, depth = mapping.project(mesh.vertices)
    p_lo, p_hi = proj.min(axis=0), proj.max(axis=0)
    s_lo, s_hi = pts.min(axis=0), pts.max(axis=0)

    span_p = p_hi - p_lo
    span_s = s_hi - s_lo
    sx = span_s[0] / span_p[0] if span_p[0] > 1e-12 else 1.0
    sy = span_s[1] / span_p[1] if span_p[1] > 1e-12 else 1.0
    sx = max(sx, 1e-9)
    sy = max(sy, 1e-9)
    sz = float(np.sqrt(sx * sy))

    view = mapping.view
    axes = np.stack([view.right(), view.up, view.direction])
    center_px = (p_lo + p_hi) / 2.0
    target_px = (s_lo + s_hi) / 2.0
    d_mid = float((depth.min() + depth.max()) / 2.0)
    c0 = (
        (center_px[0] - (mapping.size - 1) / 2.0) / mapping.scale + mapping.center2[0]
    ) * view.right() + (
        ((mapping.size - 1) / 2.0 - center_px[1]) / mapping.scale + mapping.center2[1]
    ) * view.up + d_mid * view.direction

    scale_m = scale_in_frame(axes, np.array([sx, sy, sz]), c0)
    offset = mapping.unproject_offset(target_px[0] - center_px[0], target_px[1] - center_px[1])
    return translation(offset) @ scale_m


# --- placement (R1-R3) ----------------------------------------------------


def _axis_coordinate(
    c: float, r: float, e: float, r_new: float, e_new: float
) -> tuple[float, bool]:
    """Solve one axis of R1: new center coordinate preserving penetration.

    (c, r, e): source center offset, part support radius, neighbor half
    extent; (r_new, e_new): target radii.  Returns (coordinate, clamped).
    """
    lo_p, hi_p = c - r, c + r
    overlap = min(hi_p, e) - max(lo_p, -e)
    if overlap <= 0.0:
        gap = abs(c) - (r + e)
        side = 1.0 if c >= 0 else -1.0
        gap_new = gap * (e_new / e) if e > 0 else gap
        return side * (e_new + r_new + gap_new), False
    if lo_p >= -e and hi_p <= e:  # part inside neighbor: keep relative slack
        slack, slack_new = e - r, e_new - r_new
        if slack > 1e-12 and slack_new > 0:
            return (c / slack) * slack_new, False
        return 0.0, False
    if lo_p <= -e and hi_p >= e:  # neighbor inside part
        slack, slack_new = r - e, r_new - e_new
        if slack > 1e-12 and slack_new > 0:
            return (c / slack) * slack_new, False
        return 0.0, False
    ratio = overlap / (2.0 * e)
    depth_new = ratio * (2.0 * e_new)
    clamped = depth_new > 2.0 * r_new + 1e-12
    depth_new = min(depth_new, 2.0 * r_new)
    if c > 0:
        return e_new + r_new - depth_new, clamped
    return -e_new - r_new + depth_new, clamped


def place_part(
    part: Part,
    fitted_obb: OrientedBoundingBox,
    target: PlacedPart,
    source_model: SegmentedModel,
) -> tuple[np.ndarray, dict]:
    """R1 translation placing ``part`` against ``target`` plus R2 alignment.

    The source neighbor q is the adjacent part of ``part`` sharing
    ``target``'s category; insertion ratios of part-over-q are
    reproduced against the target box, axis by axis in the target's
    frame.  Without such a neighbor the offset to any same-category
    source part is preserved (normalized by box extents) and the result
    is flagged as a fallback.
    """
    flags: dict = {"fallback": False, "clamped": (), "r2_applied": False}
    q_id = None
    for nid in source_model.neighbors_of(part.id):
        if source_model.part(nid).category == target.category:
            q_id = nid
            break
    if q_id is None:
        for candidate in source_model.parts:
            if candidate.category == target.category and candidate.id != part.id:
                q_id = candidate.id
                break
        flags["fallback"] = True
    if q_id is None:
        log.warning("no %s-category part in source model %s; keeping fitted pose",
                    target.category, source_model.id)
        flags["fallback"] = True
        return np.eye(4), flags

    q_src = source_model.part(q_id)
    coords = []
    clamped = []
    rel_src = part.obb.center - q_src.obb.center
    # parts are upright-aligned: correspond source/target box axes by
    # direction, not extent rank (near-square boxes can swap order)
    alignment = np.abs(target.obb.axes @ q_src.obb.axes.T)  # (tgt, src)
    src_for_tgt = [-1, -1, -1]
    for _ in range(3):
        i, j = np.unravel_index(int(np.argmax(alignment)), alignment.shape)
        src_for_tgt[int(i)] = int(j)
        alignment[i, :] = -np.inf
        alignment[:, j] = -np.inf
    for i in range(3):
        j = src_for_tgt[i]
        a_tgt = target.obb.axes[i]
        a_src = q_src.obb.axes[j]
        sign = 1.0 if float(a_src @ a_tgt) >= 0 else -1.0
        c = sign * float(rel_src @ a_src)
        r = part.obb.support_radius(a_src)
        e = float(q_src.obb.half_extents[j])
        r_new = fitted_obb.support_radius(a_tgt)
        e_new = float(target.obb.half_extents[i])
        coord, was_clamped = _axis_coordinate(c, r, e, r_new, e_new)
        coords.append(coord)
        if was_clamped:
            clamped.append(i)
    flags["clamped"] = tuple(clamped)
    center_target = target.obb.center + np.array(coords) @ target.obb.axes
    move = translation(center_target - fitted_obb.center)

    # R2: align reflection planes when the source pair was center-aligned
    if part.self_symmetric and q_src.self_symmetric and part.reflection_plane is not None:
        target_plane = target.world_plane()
        if target_plane is not None:
            p_plane = part.reflection_plane.transformed(move)
            if abs(float(p_plane.normal @ target_plane.normal)) >= _PLANE_ALIGN_COS:
                delta = float(target_plane.signed_distance(p_plane.point)[0])
                move = translation(-delta * target_plane.normal) @ move
                flags["r2_applied"] = True
    return move, flags


def mirror_place(
    placed: PlacedPart,
    source_model: SegmentedModel,
    target_plane: Plane | None,
) -> tuple[Part, np.ndarray] | None:
    """R3: place the symmetric counterpart as the reflection of ``placed``.

    Returns (counterpart part, transform) or None when there is no
    counterpart (or no usable plane, which logs a warning).
    """
    counterpart_id = source_model.counterpart_of(placed.part.id)
    if counterpart_id is None:
        return None
    if target_plane is None or source_model.global_plane is None:
        log.warning("cannot mirror %s: missing reflection plane", placed.part.id)
        return None
    refl_src = source_model.global_plane.reflection_matrix()
    refl_tgt = target_plane.reflection_matrix()
    transform = refl_tgt @ placed.transform @ refl_src
    return source_model.part(counterpart_id), transform


# --- contact snapping -----------------------------------------------------


def _clusters_along_axis(positions: np.ndarray, obb: OrientedBoundingBox) -> list[np.ndarray]:
    axis = obb.axes[0]
    t = positions @ axis
    lo, hi = float(t.min()), float(t.max())
    span = max(hi - lo, 1e-12)
    k = max(4, int(np.ceil(len(positions) / SNAP_CLUSTER_TARGET)))
    step = span / k
    clusters = []
    for i in range(k):
        center = lo + (i + 0.5) * step
        members = np.nonzero(np.abs(t - center) <= step)[0]  # 2*step window: 50% overlap
        if len(members) >= 3:
            clusters.append(members)
    if not clusters:
        clusters = [np.arange(len(positions))]
    return clusters


def _polar_rotation(apq: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(apq)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


@dataclass
class SnapResult:
    mesh: TriangleMesh
    residuals: list[float]
    handles: list[tuple[int, np.ndarray]]  # (vertex index, target)


def snap_handles(
    mesh: TriangleMesh,
    handles: list[tuple[int, np.ndarray]],
    obb: OrientedBoundingBox,
    eps_snap: float,
) -> SnapResult:
    """Drag handle vertices to their targets with local shape matching.

    Handles are applied sequentially (each solve warm-starts the next).
    Vertices are clustered along the part's longest box axis with 50%
    overlap; every iteration blends cluster-rigid goal positions with a
    rest-pose anchor and re-pins the handles.  Displacements are clamped
    to ``SNAP_LOCALITY`` x the largest handle displacement.
    """
    rest = mesh.vertices.copy()
    x = mesh.vertices.copy()
    if not handles:
        return SnapResult(TriangleMesh(x, mesh.triangles.copy()), [], [])
    clusters = _clusters_along_axis(rest, obb)
    rest_coms = [rest[m].mean(axis=0) for m in clusters]
    move_tol = 0.1 * eps_snap

    for upto in range(1, len(handles) + 1):
        active = handles[:upto]
        pins = np.array([h[0] for h in active])
        targets = np.stack([h[1] for h in active])
        for _ in range(SNAP_MAX_ITER):
            x[pins] = targets
            goal = np.zeros_like(x)
            weight = np.zeros(len(x))
            for members, com_r in zip(clusters, rest_coms):
                xr = rest[members] - com_r
                com_x = x[members].mean(axis=0)
                apq = (x[members] - com_x).T @ xr
                rot = _polar_rotation(apq)
                goal[members] += xr @ rot.T + com_x
                weight[members] += 1.0
            covered = weight > 0
            goal[covered] /= weight[covered, None]
            goal[~covered] = x[~covered]
            x_new = SNAP_STIFFNESS * goal + (1.0 - SNAP_STIFFNESS) * rest
            x_new[pins] = targets
            delta = float(np.abs(x_new - x).max())
            x = x_new
            if delta < move_tol:
                break

    # locality clamp
    all_pins = np.array([h[0] for h in handles])
    all_targets = np.stack([h[1] for h in handles])
    max_handle = float(np.linalg.norm(all_targets - rest[all_pins], axis=1).max())
    if max_handle > 0:
        disp = x - rest
        norms = np.linalg.norm(disp, axis=1)
        limit = SNAP_LOCALITY * max_handle
        over = norms > limit
        if over.any():
            disp[over] *= (limit / norms[over])[:, None]
            x = rest + disp
            x[all_pins] = all_targets
    residuals = [float(np.linalg.norm(x[i] - t)) for i, t in handles]
    return SnapResult(TriangleMesh(x, mesh.triangles.copy()), residuals, handles)


def resolve_handles(
    placed: PlacedPart,
    state: AssemblyState,
    db: PartDatabase,
) -> list[tuple[int, np.ndarray]]:
    """Build (vertex, target) handles for a placed part's contacts.

    Each source contact tagged with a neighbor category present in the
    assembly is dragged to the neighbor's matching stored contact when
    one exists, else to the nearest point on the neighbor's surface.
    """
    model = db.model(placed.part.model_id)
    handles: list[tuple[int, np.ndarray]] = []
    used_vertices: set[int] = set()
    for contact in placed.part.contacts:
        try:
            neighbor_cat = model.part(contact.neighbor_id).category
        except KeyError:
            continue
        candidates = [p for p in state.placed if p.category == neighbor_cat and p.part.id != placed.part.id]
        if not candidates:
            continue
        world_pos = apply_affine(placed.transform, contact.position)[0]
        neighbor = min(
            candidates,
            key=lambda p: float(np.linalg.norm(p.obb.center - world_pos)),
        )
        stored = neighbor.world_contacts_for_category(db.model(neighbor.part.model_id), placed.category)
        if stored:
            target = min(stored, key=lambda s: float(np.linalg.norm(s - world_pos)))
        else:
            _, closest = neighbor.mesh.closest_on_surface(world_pos)
            target = closest[0]
        vidx = int(np.linalg.norm(placed.mesh.vertices - world_pos, axis=1).argmin())
        if vidx in used_vertices:
            continue
        used_vertices.add(vidx)
        offset = placed.mesh.vertices[vidx] - world_pos
        handles.append((vidx, np.asarray(target) + offset))
    return handles


def snap_contacts(placed: PlacedPart, state: AssemblyState, db: PartDatabase) -> SnapResult:
    handles = resolve_handles(placed, state, db)
    eps_snap = 1e-3 * placed.mesh.bbox_diagonal()
    if not handles:
        log.warning("no resolvable contact handles for %s", placed.part.id)
        return SnapResult(placed.mesh, [], [])
    return snap_handles(placed.mesh, handles, placed.obb, eps_snap)


# --- stitching ------------------------------------------------------------


def _source_pair_smooth(part: Part, other_category: str, db: PartDatabase) -> bool:
    model = db.model(part.model_id)
    for nid in model.neighbors_of(part.id):
        if model.part(nid).category == other_category:
            return model.pair_smooth(part.id, nid)
    return False


def stitch(
    p: PlacedPart,
    q: PlacedPart,
    db: PartDatabase,
    connector_radius_rel: float = 0.05,
    weld_eps_rel: float = 0.01,
) -> dict:
    """Smoothness-aware junction: optional connector scaling then welding.

    The connector region of each part is its geometry within the
    connector radius of the other part's surface.  When both source
    connectors are smooth, the smaller cross-section is scaled up (in
    the plane perpendicular to the junction axis, blending to identity
    over the connector radius); then vertex pairs across the seam are
    welded to midpoints and unpaired near-seam vertices snap onto the
    other surface.
    """
    diag = max(p.mesh.bbox_diagonal(), q.mesh.bbox_diagonal())
    r_conn = connector_radius_rel * diag
    weld_eps = weld_eps_rel * diag
    report = {"smooth": False, "scaled": None, "factor": 1.0, "welded": 0}

    dist_pq, _ = q.mesh.closest_on_surface(p.mesh.vertices)
    dist_qp, _ = p.mesh.closest_on_surface(q.mesh.vertices)
    idx_p = np.nonzero(dist_pq <= r_conn)[0]
    idx_q = np.nonzero(dist_qp <= r_conn)[0]

    both_smooth = _source_pair_smooth(p.part, q.category, db) and _source_pair_smooth(
        q.part, p.category, db
    )
    if both_smooth:
        if len(idx_p) >= 4 and len(idx_q) >= 4:
            ext_p = points_obb(p.mesh.vertices[idx_p]).extents[:2]
            ext_q = points_obb(q.mesh.vertices[idx_q]).extents[:2]
            size_p = float(ext_p.mean())
            size_q = float(ext_q.mean())
            small = p if size_p <= size_q else q
            big = q if size_p <= size_q else p
            idx_small = idx_p if size_p <= size_q else idx_q
            d_small = dist_pq if size_p <= size_q else dist_qp
            factor = max(size_p, size_q) / max(min(size_p, size_q), 1e-12)
            axis = big.obb.center - small.obb.center
            norm = np.linalg.norm(axis)
            axis = axis / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
            center = small.mesh.vertices[idx_small].mean(axis=0)
            verts = small.mesh.vertices.copy()
            rel = verts[idx_small] - center
            blend = np.clip(1.0 - d_small[idx_small] / r_conn, 0.0, 1.0)
            local = 1.0 + (factor - 1.0) * blend
            par = (rel @ axis)[:, None] * axis
            perp = rel - par
            verts[idx_small] = center + par + perp * local[:, None]
            small.mesh = TriangleMesh(verts, small.mesh.triangles.copy())
            report.update(smooth=True, scaled=small.part.id, factor=factor)
            dist_pq, _ = q.mesh.closest_on_surface(p.mesh.vertices)
        else:
            report["smooth"] = True

    # weld vertices across the seam
    verts_p = p.mesh.vertices.copy()
    verts_q = q.mesh.vertices.copy()
    weldable = np.nonzero(dist_pq <= weld_eps)[0]
    if len(weldable):
        _, closest = q.mesh.closest_on_surface(verts_p[weldable])
        tree = cKDTree(verts_q)
        pair_d, pair_j = tree.query(verts_p[weldable])
        welded = 0
        for k, vi in enumerate(weldable):
            if pair_d[k] <= weld_eps:
                j = int(pair_j[k])
                mid = (verts_p[vi] + verts_q[j]) / 2.0
                verts_p[vi] = mid
                verts_q[j] = mid
            else:
                verts_p[vi] = closest[k]
            welded += 1
        report["welded"] = welded
        p.mesh = TriangleMesh(verts_p, p.mesh.triangles.copy())
        q.mesh = TriangleMesh(verts_q, q.mesh.triangles.copy())
    return report


__all__ = [
    "PlacedPart",
    "AssemblyState",
    "fit_to_sketch",
    "place_part",
    "mirror_place",
    "snap_contacts",
    "snap_handles",
    "resolve_handles",
    "stitch",
    "SnapResult",
]
