"""Design sessions: stroke intake, gallery production, part placement.

A session owns an evolving assembly seeded by a class's representative
model, a current view, and a canvas mapping fitted to the reference so
sketches, shadows, and placements share one coordinate frame.  All
mutating operations are serialized per session by the manager.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    AssemblyState,
    PlacedPart,
    fit_to_sketch,
    mirror_place,
    place_part,
    snap_contacts,
    stitch,
)
from .config import EngineConfig
from .dataset import PartDatabase
from .errors import SessionError
from .features import GaborBank
from .index import InvertedIndexSet
from .mesh import TriangleMesh, obj_document
from .obb import compute_obb
from .render import CanvasMapping, LineImage, compose_shadow, rasterize_polylines, render_line_drawing
from .scoring import ContextSet, ScoredPart, encode_sketch, retrieve, suggest_adjacent
from .skeleton import skeletonize
from .views import ViewDirection, make_view

_FRONT_VIEW = np.array([0.0, -1.0, 0.0])
_GALLERY_SIZE = 12


@dataclass
class GalleryEntry:
    part_id: str
    score: float
    breakdown: tuple[float, float, float]  # weighted contributions, sum == score
    origin: str                            # "retrieved" | "suggested"
    view_id: int

    def __post_init__(self) -> None:
        if self.origin not in ("retrieved", "suggested"):
            raise ValueError(f"bad gallery origin: {self.origin}")


@dataclass
class DesignSession:
    id: str
    class_name: str
    lambda1: float
    lambda2: float
    state: AssemblyState
    view: ViewDirection
    mapping: CanvasMapping
    stroke_points: np.ndarray | None = None
    stroke_polylines: list[np.ndarray] = field(default_factory=list)
    canvas_size: int = 0
    gallery_token: str = ""
    gallery: list[GalleryEntry] = field(default_factory=list)
    last_retrieval: list[ScoredPart] = field(default_factory=list)
    pending_suggestions: list[str] = field(default_factory=list)


def normalize_polylines(
    polylines: list[np.ndarray], size: int, margin: float = 0.05
) -> list[np.ndarray]:
    """Map stroke coordinates so their bbox fills the canonical square.

    Mirrors the render normalization (uniform scale by the larger bbox
    side to the usable area, centered), so a traced contour rasterizes
    like the part's own indexed render.
    """
    pts = np.vstack(polylines)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    usable = size * (1.0 - 2.0 * margin)
    scale = usable / span if span > 0 else 1.0
    center = (lo + hi) / 2.0
    half = (size - 1) / 2.0
    return [(p - center) * scale + half for p in polylines]


def normalize_sketch(img: LineImage, margin: float = 0.05) -> LineImage:
    """Fit the ink bounding box to the canonical square (uniform scale)."""
    if img.is_blank():
        return img.copy()
    size = img.size
    rows = np.nonzero(img.pixels.any(axis=1))[0]
    cols = np.nonzero(img.pixels.any(axis=0))[0]
    crop = img.pixels[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    h, w = crop.shape
    usable = int(round(size * (1.0 - 2.0 * margin)))
    scale = usable / max(h, w)
    nh, nw = max(1, int(round(h * scale))), max(1, int(round(w * scale)))
    src_r = np.minimum((np.arange(nh) / scale).astype(np.int64), h - 1)
    src_c = np.minimum((np.arange(nw) / scale).astype(np.int64), w - 1)
    scaled = crop[src_r[:, None], src_c[None, :]]
    out = np.zeros((size, size), dtype=np.uint8)
    r0 = (size - nh) // 2
    c0 = (size - nw) // 2
    out[r0 : r0 + nh, c0 : c0 + nw] = scaled
    return LineImage(out, img.view, img.part_id)


class SessionEngine:
    """Shared read-only database/index plus per-session assembly state."""

    def __init__(self, db: PartDatabase, index: InvertedIndexSet, cfg: EngineConfig | None = None):
        self.db = db
        self.index = index
        self.cfg = cfg or index.config
        self.bank = GaborBank(self.cfg.cell_size, self.cfg.gabor_bandwidth, self.cfg.gabor_aspect)
        self.sessions: dict[str, DesignSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._thumb_cache: dict[tuple[str, int], bytes] = {}

    # -- lifecycle ----------------------------------------------------

    def create_session(
        self, class_name: str, lambda1: float | None = None, lambda2: float | None = None
    ) -> DesignSession:
        if class_name not in self.db.classes():
            raise SessionError(
                f"unknown class {class_name!r}; available: {self.db.classes()}"
            )
        l1 = self.cfg.lambda1 if lambda1 is None else float(lambda1)
        l2 = self.cfg.lambda2 if lambda2 is None else float(lambda2)
        if l1 < 0 or l2 < 0:
            raise SessionError("lambda weights must be non-negative")
        reference = self.db.representative(class_name)
        view = make_view(_FRONT_VIEW)
        state = AssemblyState(reference, view)
        session = DesignSession(
            id=uuid.uuid4().hex,
            class_name=class_name,
            lambda1=l1,
            lambda2=l2,
            state=state,
            view=view,
            mapping=self._fit_mapping(reference, view),
        )
        with self._registry_lock:
            self.sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        return session

    def session(self, session_id: str) -> DesignSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise SessionError(f"unknown session: {session_id}") from None

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                raise SessionError(f"unknown session: {session_id}")
            return self._locks[session_id]

    def _fit_mapping(self, reference, view: ViewDirection) -> CanvasMapping:
        verts = np.vstack([p.mesh.vertices for p in reference.parts])
        return CanvasMapping.fit(verts, view, self.cfg.image_size, self.cfg.fit_margin)

    # -- views and shadows ---------------------------------------------

    def set_view(self, session: DesignSession, direction: np.ndarray) -> np.ndarray:
        view = make_view(np.asarray(direction, dtype=np.float64))
        session.view = view
        session.state.viewpoint = view
        session.mapping = self._fit_mapping(session.state.reference, view)
        return self.shadow(session)

    def shadow(self, session: DesignSession) -> np.ndarray:
        """Grayscale canvas: placed parts solid, unfilled reference faint."""
        cfg = self.cfg
        filled = session.state.categories()
        faint = None
        ref_meshes = [p.mesh for p in session.state.reference.parts if p.category not in filled]
        if ref_meshes:
            faint = self._render_all(ref_meshes, session)
        solid = None
        placed_meshes = [pp.mesh for pp in session.state.placed]
        if placed_meshes:
            solid = self._render_all(placed_meshes, session)
        return compose_shadow(solid, faint, cfg.image_size)

    def _render_all(self, meshes: list[TriangleMesh], session: DesignSession) -> LineImage:
        cfg = self.cfg
        out = np.zeros((cfg.image_size, cfg.image_size), dtype=np.uint8)
        for m in meshes:
            img = render_line_drawing(
                m, session.view, cfg.image_size, cfg.crease_angle_deg,
                cfg.fit_margin, cfg.pen_width, mapping=session.mapping,
            )
            out |= img.pixels
        return LineImage(out)

    # -- strokes and retrieval -----------------------------------------

    def submit_strokes(
        self,
        session: DesignSession,
        polylines: list[np.ndarray],
        canvas_size: int,
        category: str,
        n: int = _GALLERY_SIZE,
    ) -> list[GalleryEntry]:
        if not polylines or all(len(p) == 0 for p in polylines):
            raise SessionError("strokes must contain at least one point")
        if canvas_size <= 0:
            raise SessionError("canvas size must be positive")
        arrays = [np.atleast_2d(np.asarray(p, dtype=np.float64)) for p in polylines if len(p)]
        for arr in arrays:
            if (arr < -1e-6).any() or (arr > canvas_size + 1e-6).any():
                raise SessionError("stroke coordinates outside canvas bounds")
        factor = self.cfg.image_size / canvas_size
        session.stroke_polylines = arrays
        session.stroke_points = np.vstack(arrays) * factor
        session.canvas_size = canvas_size

        # normalize stroke geometry before rasterizing so the sketch is
        # quantized exactly like the indexed (bbox-fitted) renders
        size = self.cfg.image_size
        normed = normalize_polylines(arrays, size, self.cfg.fit_margin)
        raster = rasterize_polylines(normed, size, size, self.cfg.pen_width)
        sketch = skeletonize(raster)
        sketch_hist = encode_sketch(self.index, sketch, self.bank)

        ctx_ids = self._context_ids(session, category)
        ctx = ContextSet.from_ids(self.index, ctx_ids)
        ranked, _fallback = retrieve(
            self.index, sketch_hist, session.view, category, ctx,
            session.lambda1, session.lambda2, n,
        )
        session.last_retrieval = ranked
        entries = [
            GalleryEntry(sp.part_id, sp.score, sp.breakdown, "retrieved", sp.view_id)
            for sp in ranked
        ]
        view_id = self.index.nearest_view_id(session.view)
        for pid in session.pending_suggestions:
            if pid not in {e.part_id for e in entries}:
                entries.append(GalleryEntry(pid, 0.0, (0.0, 0.0, 0.0), "suggested", view_id))
        session.gallery = entries
        session.gallery_token = uuid.uuid4().hex
        return entries

    def _context_ids(self, session: DesignSession, category: str) -> list[str]:
        neighbor_cats = self.db.category_neighbors(category)
        return [
            pp.part.id
            for pp in session.state.placed
            if pp.category in neighbor_cats and pp.part.id in self.index.entries
        ]

    # -- selection and placement ----------------------------------------

    def select_part(self, session: DesignSession, part_id: str, gallery_token: str) -> dict:
        if not session.gallery:
            raise SessionError("no gallery: submit strokes first")
        if gallery_token != session.gallery_token:
            raise SessionError("stale gallery token")
        if part_id not in {e.part_id for e in session.gallery}:
            raise SessionError(f"part {part_id} is not in the current gallery")
        part = self.db.part(part_id)
        source_model = self.db.model(part.model_id)
        state = session.state

        if session.stroke_points is not None and len(session.stroke_points):
            fit_m = fit_to_sketch(part.mesh, session.stroke_points, session.mapping)
        else:
            fit_m = np.eye(4)
        fitted_mesh = part.mesh.transformed(fit_m)
        fitted_obb = compute_obb(fitted_mesh)

        source_neighbor_cats = {
            source_model.part(nid).category for nid in source_model.neighbors_of(part.id)
        }
        candidates = [pp for pp in state.placed if pp.category in source_neighbor_cats]
        if not candidates:
            fallback_cats = self.db.category_neighbors(part.category)
            candidates = [pp for pp in state.placed if pp.category in fallback_cats]
        flags = {"fallback": False, "clamped": (), "r2_applied": False}
        if candidates:
            target = max(candidates, key=lambda pp: pp.order)
            move, flags = place_part(part, fitted_obb, target, source_model)
        else:
            move = np.eye(4)
        transform = move @ fit_m

        state.remove_category(part.category)
        placed = PlacedPart(
            part=part,
            transform=transform,
            mesh=part.mesh.transformed(transform),
            obb=fitted_obb.translated(move[:3, 3]),
            fallback=bool(flags.get("fallback")),
            clamped_axes=tuple(flags.get("clamped", ())),
        )
        state.add(placed)

        mirrored = mirror_place(placed, source_model, state.global_plane)
        mirror_id = None
        if mirrored is not None:
            cpart, ctransform = mirrored
            counterpart = PlacedPart(
                part=cpart,
                transform=ctransform,
                mesh=cpart.mesh.transformed(ctransform),
                obb=compute_obb(cpart.mesh.transformed(ctransform)),
                mirrored_from=part.id,
            )
            state.add(counterpart)
            mirror_id = cpart.id

        residuals: list[float] = []
        for pp in state.by_category(part.category):
            result = snap_contacts(pp, state, self.db)
            pp.mesh = result.mesh
            residuals.extend(result.residuals)

        stitched = []
        adjacent_cats = self.db.category_neighbors(part.category)
        for pp in state.by_category(part.category):
            for other in state.placed:
                if other.category in adjacent_cats:
                    stitched.append(stitch(pp, other, self.db, self.db.thresholds.connector_radius))

        session.pending_suggestions = suggest_adjacent(
            self.index, session.last_retrieval, self.cfg.top_k_adjacent,
            self.cfg.suggest_clusters, self.cfg.kmeans_seed,
        )
        session.gallery = []
        session.gallery_token = ""
        return {
            "placed": [
                {
                    "part_id": pp.part.id,
                    "category": pp.category,
                    "transform": pp.transform.reshape(-1).tolist(),
                    "fallback": pp.fallback,
                    "mirrored_from": pp.mirrored_from,
                }
                for pp in state.placed
            ],
            "selected": part_id,
            "mirrored": mirror_id,
            "rule_flags": {k: list(v) if isinstance(v, tuple) else v for k, v in flags.items()},
            "residuals": residuals,
            "stitched": stitched,
            "open_slots": state.open_slots(self.db),
            "suggestions": session.pending_suggestions,
        }

    # -- export and thumbnails ------------------------------------------

    def export_obj(self, session: DesignSession) -> str:
        if not session.state.placed:
            raise SessionError("nothing to export: no parts placed")
        groups = [(pp.part.id, pp.mesh) for pp in session.state.placed]
        return obj_document(groups)

    def thumbnail(self, part_id: str, view_id: int, size: int = 160) -> np.ndarray:
        part = self.db.part(part_id)
        view = self.index.views[view_id] if 0 <= view_id < len(self.index.views) else make_view(_FRONT_VIEW)
        img = render_line_drawing(
            part.mesh, view, size, self.cfg.crease_angle_deg, self.cfg.fit_margin, 1
        )
        canvas = np.full((size, size), 255, dtype=np.uint8)
        canvas[img.pixels == 1] = 0
        return canvas


__all__ = ["SessionEngine", "DesignSession", "GalleryEntry", "normalize_sketch"]
