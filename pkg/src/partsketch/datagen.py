"""Procedural chair corpora for tests, benchmarks, and demos.

Chairs come in two style families with distinct interior line patterns
(square: boxy outlines, horizontal slats; round: curved outlines,
vertical bars), mirrored armrest pairs, and seeded per-model dimension
jitter so every part is unique.  Output is a manifest plus one ASCII
OBJ per part.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, merge_meshes, save_obj


def box_mesh(center, size) -> TriangleMesh:
    c = np.asarray(center, dtype=np.float64)
    s = np.asarray(size, dtype=np.float64) / 2.0
    lo, hi = c - s, c + s
    v = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    f = np.array(
        [
            [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
            [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
            [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
        ]
    )
    return TriangleMesh(v, f)


def cylinder_mesh(p0, p1, radius, segments: int = 16, radius2: float | None = None) -> TriangleMesh:
    """Capped cylinder (or cone frustum) from p0 to p1."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length == 0:
        raise ValueError("degenerate cylinder")
    axis = axis / length
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    r1 = radius if radius2 is None else radius2
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    ring0 = p0 + radius * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), w))
    ring1 = p1 + r1 * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), w))
    verts = np.vstack([ring0, ring1, p0[None, :], p1[None, :]])
    c0, c1 = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + j], [i, segments + j, segments + i]]
        faces += [[c0, j, i], [c1, segments + i, segments + j]]
    return TriangleMesh(verts, np.array(faces))


def ellipse_slab(center, rx, ry, thickness, axis: str = "y", segments: int = 24) -> TriangleMesh:
    """Elliptic disk extruded along one axis (round seats and backs)."""
    c = np.asarray(center, dtype=np.float64)
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    if axis == "y":  # slab normal along y (chair back)
        ring = np.stack([rx * np.cos(ang), np.zeros_like(ang), ry * np.sin(ang)], axis=1)
        off = np.array([0.0, thickness / 2.0, 0.0])
    else:  # normal along z (seat)
        ring = np.stack([rx * np.cos(ang), ry * np.sin(ang), np.zeros_like(ang)], axis=1)
        off = np.array([0.0, 0.0, thickness / 2.0])
    ring0 = c + ring - off
    ring1 = c + ring + off
    verts = np.vstack([ring0, ring1, (c - off)[None, :], (c + off)[None, :]])
    c0, c1 = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + j], [i, segments + j, segments + i]]
        faces += [[c0, j, i], [c1, segments + i, segments + j]]
    return TriangleMesh(verts, np.array(faces))


def _jitter_mesh(mesh: TriangleMesh, amount: float, rng: np.random.Generator) -> TriangleMesh:
    noise = rng.normal(0.0, amount, size=mesh.vertices.shape)
    return TriangleMesh(mesh.vertices + noise, mesh.triangles.copy())


def _square_back(rng, w, h, thick, z0, y, n_slats) -> TriangleMesh:
    rail = 0.06 * h
    parts = [
        box_mesh([0, y, z0 + h - rail / 2], [w, thick, rail]),        # top rail
        box_mesh([-w / 2 + rail / 2, y, z0 + h / 2], [rail, thick, h]),
        box_mesh([w / 2 - rail / 2, y, z0 + h / 2], [rail, thick, h]),
        box_mesh([0, y, z0 + rail / 2], [w, thick, rail]),            # bottom rail
    ]
    for k in range(n_slats):
        z = z0 + (k + 1) * h / (n_slats + 1)
        parts.append(box_mesh([0, y, z], [w - 2 * rail, thick, 0.035 * h]))
    return merge_meshes(parts)


def _round_back(rng, w, h, thick, z0, y, n_bars) -> TriangleMesh:
    """Arch frame (rounded crown) with vertical bars.

    The footprint stays close to the square family's rectangle so
    outline-only sketches are ambiguous between the two styles; the
    interior pattern (vertical round bars vs horizontal slats) and the
    crown curvature carry the style.
    """
    rail = 0.06 * h
    crown_h = 0.22 * h
    straight_h = h - crown_h
    parts = [
        cylinder_mesh([-w / 2 + rail / 2, y, z0], [-w / 2 + rail / 2, y, z0 + straight_h], rail / 2),
        cylinder_mesh([w / 2 - rail / 2, y, z0], [w / 2 - rail / 2, y, z0 + straight_h], rail / 2),
        box_mesh([0, y, z0 + rail / 2], [w, thick, rail]),
        # crown: shallow elliptical band across the top
        ellipse_slab([0, y, z0 + straight_h], w / 2, crown_h, thick, axis="y", segments=32),
    ]
    for k in range(n_bars):
        x = -w / 2 + (k + 1) * w / (n_bars + 1)
        top = z0 + straight_h + 0.6 * crown_h * np.sqrt(max(0.05, 1 - (x / (w / 2)) ** 2))
        parts.append(cylinder_mesh([x, y, z0 + rail], [x, y, top], 0.018 * w))
    return merge_meshes(parts)


def _seat_grooves(rng, w, d, seat_top, mode: str, style: str) -> list[TriangleMesh]:
    """Thin raised strips on the seat top (interior detail lines).

    "style" ties groove orientation to the family (round: along y,
    square: along x); "mixed" draws it at random, decorrelating detail
    words from the outline for corpora that need dense word sharing.
    """
    if mode == "none":
        return []
    n = int(rng.integers(2, 5))
    strips = []
    for k in range(n):
        if mode == "style":
            vertical = style == "round"
        else:
            # guarantee both orientations so every seat shares detail
            # words with both slat and bar interiors
            vertical = bool(rng.random() < 0.5) if k >= 2 else (k == 1)
        t = -0.3 + 0.6 * (k + 0.5) / n
        if vertical:
            strips.append(box_mesh([t * w, 0, seat_top + 0.002], [0.012 * w, d * 0.62, 0.004]))
        else:
            strips.append(box_mesh([0, t * d, seat_top + 0.002], [w * 0.62, 0.012 * d, 0.004]))
    return strips


def make_chair(
    model_id: str,
    style: str,
    rng: np.random.Generator,
    with_arms: bool,
    seat_grooves: str = "mixed",
) -> dict:
    """One chair's part meshes keyed by part name, plus metadata."""
    w = 0.52 * rng.uniform(0.85, 1.15)     # seat width (x)
    d = 0.50 * rng.uniform(0.85, 1.15)     # seat depth (y)
    seat_h = 0.45 * rng.uniform(0.9, 1.1)  # seat top height
    seat_t = 0.05 * rng.uniform(0.8, 1.2)
    back_h = 0.50 * rng.uniform(0.85, 1.2)
    back_t = 0.05
    sink = 0.012                            # embed depth into the seat

    seat_top = seat_h
    seat_c = seat_h - seat_t / 2
    if style == "square":
        seat_shell = box_mesh([0, 0, seat_c], [w, d, seat_t])
        back = _square_back(rng, w * 0.96, back_h, back_t, seat_top - sink,
                            d / 2 - back_t / 2, int(rng.integers(2, 5)))
    else:
        seat_shell = ellipse_slab([0, 0, seat_c], w / 2, d / 2, seat_t, axis="z")
        back = _round_back(rng, w * 0.92, back_h, back_t, seat_top - sink,
                           d / 2 * 0.86, int(rng.integers(2, 5)))
    seat = merge_meshes([seat_shell] + _seat_grooves(rng, w, d, seat_top, seat_grooves, style))

    lx, ly = 0.38 * w, 0.36 * d
    leg_top = seat_h - seat_t + sink
    splay = rng.uniform(0.0, 0.18)
    taper = rng.uniform(0.6, 1.0)
    stretcher_h = leg_top * rng.uniform(0.25, 0.6)
    leg_r = 0.032 * w

    def leg_at(sx: float, sy: float) -> TriangleMesh:
        top = np.array([sx * lx, sy * ly, leg_top])
        bot = np.array([sx * lx * (1 + splay), sy * ly * (1 + splay), 0.0])
        if style == "square":
            side = 0.05 * w
            return box_mesh([(top[0] + bot[0]) / 2, (top[1] + bot[1]) / 2, leg_top / 2],
                            [side + abs(top[0] - bot[0]), side + abs(top[1] - bot[1]), leg_top])
        return cylinder_mesh(bot, top, leg_r, radius2=leg_r * taper)

    def stretch_point(sx: float, sy: float) -> np.ndarray:
        t = stretcher_h / leg_top
        return np.array([sx * lx * (1 + splay * (1 - t)), sy * ly * (1 + splay * (1 - t)), stretcher_h])

    pieces = [leg_at(sx, sy) for sx in (-1, 1) for sy in (-1, 1)]
    ring = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    bar_r = leg_r * 0.7
    for k in range(4):
        a = stretch_point(*ring[k])
        b = stretch_point(*ring[(k + 1) % 4])
        if style == "square":
            lo = np.minimum(a, b) - bar_r
            hi = np.maximum(a, b) + bar_r
            pieces.append(box_mesh((lo + hi) / 2, hi - lo))
        else:
            pieces.append(cylinder_mesh(a, b, bar_r))
    legs = merge_meshes(pieces)

    parts = {"back": back, "seat": seat, "legs": legs}
    if with_arms:
        ax = w / 2 * 0.92
        arm_h = 0.22 * rng.uniform(0.7, 1.3)
        rail_len = d * rng.uniform(0.55, 0.8)
        post_y = rng.uniform(-0.15, 0.15) * d
        brace_y = post_y + rng.uniform(0.2, 0.45) * d * (1 if rng.random() < 0.5 else -1)
        brace_top = seat_top + arm_h * rng.uniform(0.75, 1.0)
        if style == "square":
            post = box_mesh([ax, post_y, seat_top + arm_h / 2 - sink], [0.05 * w, 0.06 * d, arm_h + sink])
            rail = box_mesh([ax, 0, seat_top + arm_h], [0.05 * w, rail_len, 0.04])
            brace = box_mesh(
                [ax, (post_y + brace_y) / 2, (seat_top + brace_top) / 2],
                [0.04 * w, abs(brace_y - post_y) + 0.03 * d, brace_top - seat_top],
            )
        else:
            post = cylinder_mesh([ax, post_y, seat_top - sink], [ax, post_y, seat_top + arm_h], 0.026 * w)
            rail = cylinder_mesh([ax, -rail_len / 2, seat_top + arm_h], [ax, rail_len / 2, seat_top + arm_h], 0.026 * w)
            brace = cylinder_mesh([ax, post_y, seat_top - sink], [ax, brace_y, brace_top], 0.02 * w)
        arm_l = merge_meshes([post, rail, brace])
        arm_l = TriangleMesh(arm_l.vertices * np.array([-1.0, 1.0, 1.0]), arm_l.triangles[:, ::-1].copy())
        arm_r = TriangleMesh(arm_l.vertices * np.array([-1.0, 1.0, 1.0]), arm_l.triangles[:, ::-1].copy())
        # tiny asymmetric jitter keeps the pair distinguishable while
        # staying well inside the symmetry tolerance
        arm_r = _jitter_mesh(arm_r, 0.0015, rng)
        parts["armrest_l"] = arm_l
        parts["armrest_r"] = arm_r
    return {"style": style, "parts": parts}


def make_desk_corpus(
    root: str | Path,
    n_models: int = 30,
    seed: int = 0,
    armrest_prob: float = 0.9,
    class_name: str = "chair",
    seat_grooves: str = "mixed",
) -> Path:
    """Write a chair corpus (meshes + manifest); returns the manifest path."""
    root = Path(root)
    mesh_dir = root / "meshes"
    mesh_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    models = []
    for i in range(n_models):
        mid = f"chair_{i:03d}"
        style = "round" if i % 2 == 0 else "square"
        with_arms = bool(rng.random() < armrest_prob)
        chair = make_chair(mid, style, rng, with_arms, seat_grooves)
        parts = []
        adjacency = []
        for name, mesh in chair["parts"].items():
            pid = f"{mid}:{name}"
            fname = f"{mid}_{name}.obj"
            save_obj(mesh_dir / fname, [(pid, mesh)])
            category = "armrest" if name.startswith("armrest") else name
            parts.append({"id": pid, "file": f"meshes/{fname}", "category": category})
        adjacency.append([f"{mid}:back", f"{mid}:seat"])
        adjacency.append([f"{mid}:legs", f"{mid}:seat"])
        if "armrest_l" in chair["parts"]:
            adjacency.append([f"{mid}:armrest_l", f"{mid}:seat"])
            adjacency.append([f"{mid}:armrest_r", f"{mid}:seat"])
        models.append({"id": mid, "class": class_name, "style": chair["style"],
                       "parts": parts, "adjacency": adjacency})

    manifest = {
        "name": "desk-chairs",
        "class": class_name,
        "upright": [0, 0, 1],
        "representative": {class_name: next(m["id"] for m in models if len(m["parts"]) > 4)},
        "models": models,
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


__all__ = [
    "box_mesh",
    "cylinder_mesh",
    "ellipse_slab",
    "make_chair",
    "make_desk_corpus",
]
