"""Part database: manifest ingestion and precomputed contextual analysis.

A dataset is declared by a JSON manifest (see ``docs/manifest.md``):

    {
      "name": "desk-chairs",
      "upright": [0, 0, 1],
      "representative": {"chair": "chair_00"},
      "thresholds": {"tau_sym": 0.02, ...},
      "models": [
        {"id": "chair_00", "class": "chair",
         "parts": [{"id": "chair_00:seat", "file": "meshes/...obj",
                    "category": "seat"}],
         "adjacency": [["chair_00:seat", "chair_00:back"]]}
      ]
    }

Meshes are ASCII OBJ, already segmented, labeled, and upright-aligned.
Loading runs the geometric analysis (OBBs, symmetry, contacts,
insertion ratios, connector smoothness) and caches it in a binary
sidecar keyed by the manifest content hash.
"""

from __future__ import annotations

import hashlib
import json
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .config import AnalysisThresholds
from .errors import DatasetError
from .mesh import TriangleMesh, load_obj, merge_meshes
from .obb import InsertionRatios, OrientedBoundingBox, compute_obb, insertion_ratios
from .transforms import Plane
from .views import ViewDirection, common_view

log = logging.getLogger(__name__)

_CACHE_VERSION = 1


@dataclass
class ContactPoint:
    position: np.ndarray
    neighbor_id: str


@dataclass
class Part:
    id: str
    mesh: TriangleMesh
    category: str
    model_id: str
    obb: OrientedBoundingBox | None = None
    self_symmetric: bool = False
    reflection_plane: Plane | None = None
    contacts: list[ContactPoint] = field(default_factory=list)

    def contact_points_for(self, neighbor_id: str) -> list[np.ndarray]:
        return [c.position for c in self.contacts if c.neighbor_id == neighbor_id]


@dataclass
class SegmentedModel:
    id: str
    class_name: str
    parts: list[Part]
    adjacency: list[tuple[str, str]]
    global_plane: Plane | None = None
    symmetry_pairs: list[tuple[str, str]] = field(default_factory=list)
    ratios: dict[tuple[str, str], InsertionRatios] = field(default_factory=dict)
    smooth: dict[tuple[str, str], bool] = field(default_factory=dict)
    diagonal: float = 0.0

    def part(self, pid: str) -> Part:
        for p in self.parts:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def neighbors_of(self, pid: str) -> list[str]:
        out = []
        for a, b in self.adjacency:
            if a == pid:
                out.append(b)
            elif b == pid:
                out.append(a)
        return out

    def counterpart_of(self, pid: str) -> str | None:
        for a, b in self.symmetry_pairs:
            if a == pid:
                return b
            if b == pid:
                return a
        return None

    def pair_ratio(self, p: str, q: str) -> InsertionRatios | None:
        return self.ratios.get((p, q))

    def pair_smooth(self, p: str, q: str) -> bool:
        key = (p, q) if p < q else (q, p)
        return self.smooth.get(key, False)


@dataclass
class PartDatabase:
    models: list[SegmentedModel]
    upright: np.ndarray
    thresholds: AnalysisThresholds
    manifest_hash: str
    representatives: dict[str, str]
    common_views: dict[str, ViewDirection] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._models_by_id = {m.id: m for m in self.models}
        self._parts_by_id: dict[str, Part] = {}
        self._parts_by_category: dict[str, list[Part]] = {}
        for m in self.models:
            for p in m.parts:
                self._parts_by_id[p.id] = p
                self._parts_by_category.setdefault(p.category, []).append(p)

    def model(self, mid: str) -> SegmentedModel:
        try:
            return self._models_by_id[mid]
        except KeyError:
            raise DatasetError(f"unknown model id: {mid}") from None

    def part(self, pid: str) -> Part:
        try:
            return self._parts_by_id[pid]
        except KeyError:
            raise DatasetError(f"unknown part id: {pid}") from None

    def parts(self) -> list[Part]:
        return list(self._parts_by_id.values())

    def categories(self) -> list[str]:
        return sorted(self._parts_by_category)

    def parts_in_category(self, category: str) -> list[Part]:
        try:
            return self._parts_by_category[category]
        except KeyError:
            raise DatasetError(f"unknown category: {category}") from None

    def classes(self) -> list[str]:
        return sorted({m.class_name for m in self.models})

    def representative(self, class_name: str) -> SegmentedModel:
        if class_name not in self.representatives:
            raise DatasetError(
                f"unknown class {class_name!r}; available: {self.classes()}"
            )
        return self.model(self.representatives[class_name])

    def category_neighbors(self, category: str) -> set[str]:
        """Categories adjacent to ``category`` in any model."""
        out: set[str] = set()
        for m in self.models:
            for a, b in m.adjacency:
                ca = m.part(a).category
                cb = m.part(b).category
                if ca == category and cb != category:
                    out.add(cb)
                elif cb == category and ca != category:
                    out.add(ca)
        return out


def _hash_manifest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DatasetError(message)


def _parse_manifest(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise DatasetError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest is not valid JSON: {path}: {exc}") from None
    _require(isinstance(data.get("models"), list) and data["models"], f"{path}: manifest needs a non-empty models[] list")
    return data


def load_dataset(manifest_path: str | Path, use_cache: bool = True) -> PartDatabase:
    """Load and analyze a dataset manifest.

    Raises :class:`DatasetError` naming the offending model/part on any
    inconsistency (missing file, empty category, unknown adjacency id).
    """
    path = Path(manifest_path)
    data = _parse_manifest(path)
    manifest_hash = _hash_manifest(path)
    base = path.parent

    thresholds = AnalysisThresholds.from_dict(data.get("thresholds", {}))
    upright = np.asarray(data.get("upright", [0, 0, 1]), dtype=np.float64)
    _require(upright.shape == (3,) and np.linalg.norm(upright) > 0, f"{path}: invalid upright axis")
    upright = upright / np.linalg.norm(upright)

    default_class = data.get("class", data.get("name", "default"))
    models: list[SegmentedModel] = []
    seen_parts: set[str] = set()
    for mdata in data["models"]:
        mid = mdata.get("id")
        _require(bool(mid), f"{path}: model without id")
        parts: list[Part] = []
        explicit_contacts: dict[str, list[dict]] = {}
        _require(bool(mdata.get("parts")), f"model {mid}: no parts")
        for pdata in mdata["parts"]:
            pid = pdata.get("id")
            _require(bool(pid), f"model {mid}: part without id")
            _require(pid not in seen_parts, f"duplicate part id: {pid}")
            seen_parts.add(pid)
            category = pdata.get("category", "")
            _require(bool(category), f"part {pid}: empty category")
            mesh_file = base / pdata.get("file", "")
            try:
                mesh = load_obj(mesh_file)
            except DatasetError as exc:
                raise DatasetError(f"part {pid}: {exc}") from None
            parts.append(Part(pid, mesh, category, mid))
            if pdata.get("contacts"):
                explicit_contacts[pid] = pdata["contacts"]
        part_ids = {p.id for p in parts}
        adjacency: list[tuple[str, str]] = []
        for pair in mdata.get("adjacency", []):
            _require(len(pair) == 2, f"model {mid}: adjacency entries must be pairs")
            a, b = pair
            for pid in (a, b):
                _require(pid in part_ids, f"model {mid}: adjacency references unknown part id: {pid}")
            _require(a != b, f"model {mid}: self-adjacency on {a}")
            key = (a, b) if a < b else (b, a)
            if key not in adjacency:
                adjacency.append(key)
        model = SegmentedModel(mid, mdata.get("class", default_class), parts, adjacency)
        _attach_explicit_contacts(model, explicit_contacts)
        models.append(model)

    representatives = _parse_representatives(data, models, path)
    db = PartDatabase(models, upright, thresholds, manifest_hash, representatives)

    cache_path = path.with_suffix(path.suffix + ".analysis")
    if use_cache and _load_analysis_cache(db, cache_path):
        log.info("analysis cache hit: %s", cache_path)
        return db
    _analyze(db)
    if use_cache:
        _save_analysis_cache(db, cache_path)
    return db


def _parse_representatives(data: dict, models: list[SegmentedModel], path: Path) -> dict[str, str]:
    raw = data.get("representative")
    classes = {m.class_name for m in models}
    by_id = {m.id: m for m in models}
    reps: dict[str, str] = {}
    if isinstance(raw, str):
        _require(raw in by_id, f"{path}: representative references unknown model: {raw}")
        reps[by_id[raw].class_name] = raw
    elif isinstance(raw, dict):
        for cls, mid in raw.items():
            _require(mid in by_id, f"{path}: representative references unknown model: {mid}")
            _require(cls in classes, f"{path}: representative for unknown class: {cls}")
            reps[cls] = mid
    for cls in sorted(classes - set(reps)):
        reps[cls] = sorted(m.id for m in models if m.class_name == cls)[0]
    return reps


def _attach_explicit_contacts(model: SegmentedModel, explicit: dict[str, list[dict]]) -> None:
    for pid, entries in explicit.items():
        part = model.part(pid)
        for entry in entries:
            _require("point" in entry and "neighbor" in entry, f"part {pid}: contact entries need point and neighbor")
            neighbor = entry["neighbor"]
            _require(
                any(neighbor in pair for pair in model.adjacency if pid in pair),
                f"part {pid}: contact neighbor {neighbor} is not adjacent",
            )
            part.contacts.append(ContactPoint(np.asarray(entry["point"], dtype=np.float64), neighbor))


def _analyze(db: PartDatabase) -> None:
    thresholds = db.thresholds
    for model in db.models:
        for part in model.parts:
            part.obb = compute_obb(part.mesh)
        merged = merge_meshes([p.mesh for p in model.parts])
        model.diagonal = merged.bbox_diagonal()
        model_obb = compute_obb(merged)
        model.global_plane = analysis.detect_global_symmetry(merged, model_obb, thresholds, model.id)

        if model.global_plane is not None:
            meshes = {p.id: p.mesh for p in model.parts}
            pairs, selfsym = analysis.detect_inter_part_symmetry(
                [p.id for p in model.parts], meshes, model.global_plane, model.diagonal, thresholds
            )
            model.symmetry_pairs = pairs
            for part in model.parts:
                if part.id in selfsym:
                    part.self_symmetric = True
                    part.reflection_plane = model.global_plane

        eps = thresholds.contact_eps * model.diagonal
        r_conn = thresholds.connector_radius * model.diagonal
        n_samples = thresholds.sample_count
        for a, b in model.adjacency:
            pa, pb = model.part(a), model.part(b)
            existing = pa.contact_points_for(b) + [
                p for p in pb.contact_points_for(a)
                if not any(np.allclose(p, q) for q in pa.contact_points_for(b))
            ]
            if existing:
                contacts = existing
                pa.contacts = [c for c in pa.contacts if c.neighbor_id != b]
                pb.contacts = [c for c in pb.contacts if c.neighbor_id != a]
                for point in contacts:
                    pa.contacts.append(ContactPoint(point, b))
                    pb.contacts.append(ContactPoint(point, a))
            else:
                contacts = analysis.detect_contacts(
                    pa.mesh, pb.mesh, eps,
                    analysis.stable_seed(a, thresholds.seed),
                    analysis.stable_seed(b, thresholds.seed),
                    n_samples,
                )
                if not contacts:
                    log.warning("no contacts found for adjacent pair (%s, %s)", a, b)
                for point in contacts:
                    pa.contacts.append(ContactPoint(point, b))
                    pb.contacts.append(ContactPoint(point, a))
            model.ratios[(a, b)] = insertion_ratios(pa.obb, pb.obb)
            model.ratios[(b, a)] = insertion_ratios(pb.obb, pa.obb)
            model.smooth[(a, b)] = analysis.connector_smoothness(
                pa.mesh, pb.mesh, contacts, r_conn, thresholds.smooth_band,
                analysis.stable_seed(a + "#conn", thresholds.seed),
                analysis.stable_seed(b + "#conn", thresholds.seed),
                thresholds.sample_count,
            )

    for category in db.categories():
        obbs = [p.obb for p in db.parts_in_category(category)]
        db.common_views[category] = common_view(obbs)


def _plane_state(plane: Plane | None):
    return None if plane is None else (plane.point.tolist(), plane.normal.tolist())


def _plane_from_state(state) -> Plane | None:
    return None if state is None else Plane(np.array(state[0]), np.array(state[1]))


def _obb_state(obb: OrientedBoundingBox):
    return (obb.center.tolist(), obb.axes.tolist(), obb.half_extents.tolist(), obb.degenerate)


def _obb_from_state(state) -> OrientedBoundingBox:
    return OrientedBoundingBox(np.array(state[0]), np.array(state[1]), np.array(state[2]), state[3])


def _save_analysis_cache(db: PartDatabase, path: Path) -> None:
    payload = {
        "version": _CACHE_VERSION,
        "manifest_hash": db.manifest_hash,
        "models": {},
        "common_views": {
            cat: (v.direction.tolist(), v.up.tolist()) for cat, v in db.common_views.items()
        },
    }
    for model in db.models:
        payload["models"][model.id] = {
            "diagonal": model.diagonal,
            "global_plane": _plane_state(model.global_plane),
            "symmetry_pairs": model.symmetry_pairs,
            "ratios": {k: v.as_array().tolist() for k, v in model.ratios.items()},
            "smooth": model.smooth,
            "parts": {
                p.id: {
                    "obb": _obb_state(p.obb),
                    "self_symmetric": p.self_symmetric,
                    "reflection_plane": _plane_state(p.reflection_plane),
                    "contacts": [(c.position.tolist(), c.neighbor_id) for c in p.contacts],
                }
                for p in model.parts
            },
        }
    path.write_bytes(pickle.dumps(payload))


def _load_analysis_cache(db: PartDatabase, path: Path) -> bool:
    if not path.exists():
        return False
    try:
        payload = pickle.loads(path.read_bytes())
    except Exception:
        log.warning("unreadable analysis cache: %s", path)
        return False
    if payload.get("version") != _CACHE_VERSION or payload.get("manifest_hash") != db.manifest_hash:
        return False
    try:
        for model in db.models:
            mstate = payload["models"][model.id]
            model.diagonal = mstate["diagonal"]
            model.global_plane = _plane_from_state(mstate["global_plane"])
            model.symmetry_pairs = [tuple(p) for p in mstate["symmetry_pairs"]]
            model.ratios = {tuple(k): InsertionRatios(*v) for k, v in mstate["ratios"].items()}
            model.smooth = {tuple(k): v for k, v in mstate["smooth"].items()}
            for part in model.parts:
                pstate = mstate["parts"][part.id]
                part.obb = _obb_from_state(pstate["obb"])
                part.self_symmetric = pstate["self_symmetric"]
                part.reflection_plane = _plane_from_state(pstate["reflection_plane"])
                part.contacts = [
                    ContactPoint(np.array(pos), nid) for pos, nid in pstate["contacts"]
                ]
        db.common_views = {
            cat: ViewDirection(np.array(d), np.array(u))
            for cat, (d, u) in payload["common_views"].items()
        }
    except KeyError:
        return False
    return True


__all__ = [
    "Part",
    "ContactPoint",
    "SegmentedModel",
    "PartDatabase",
    "load_dataset",
]
