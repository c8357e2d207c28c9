"""Pure-numpy reference implementations of the hot kernels.

Semantics match ``_numba`` exactly (same arithmetic expressions, same
tie-breaking); the parity test suite asserts bit-identical outputs.
"""

from __future__ import annotations

import numpy as np


def zbuffer_triangles(xy: np.ndarray, depth: np.ndarray, size: int) -> np.ndarray:
    """Rasterize triangles into a max-depth buffer.

    xy: (n, 3, 2) pixel-space vertices (x=col, y=row), depth: (n, 3)
    with larger values closer to the viewer.  Returns (size, size)
    float64 buffer initialized to -inf.
    """
    zbuf = np.full((size, size), -np.inf, dtype=np.float64)
    for i in range(xy.shape[0]):
        x0, y0 = xy[i, 0]
        x1, y1 = xy[i, 1]
        x2, y2 = xy[i, 2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        cmin = max(0, int(np.floor(min(x0, x1, x2))))
        cmax = min(size - 1, int(np.ceil(max(x0, x1, x2))))
        rmin = max(0, int(np.floor(min(y0, y1, y2))))
        rmax = min(size - 1, int(np.ceil(max(y0, y1, y2))))
        if cmin > cmax or rmin > rmax:
            continue
        cs = np.arange(cmin, cmax + 1, dtype=np.float64)
        rs = np.arange(rmin, rmax + 1, dtype=np.float64)
        c, r = np.meshgrid(cs, rs)
        w0 = (x2 - x1) * (r - y1) - (y2 - y1) * (c - x1)
        w1 = (x0 - x2) * (r - y2) - (y0 - y2) * (c - x2)
        w2 = (x1 - x0) * (r - y0) - (y1 - y0) * (c - x0)
        if area < 0.0:
            inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        else:
            inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        d = (w0 * depth[i, 0] + w1 * depth[i, 1] + w2 * depth[i, 2]) / area
        patch = zbuf[rmin : rmax + 1, cmin : cmax + 1]
        np.maximum(patch, np.where(inside, d, -np.inf), out=patch)
    return zbuf


def draw_segments(
    img: np.ndarray,
    zbuf: np.ndarray,
    seg_xy: np.ndarray,
    seg_d: np.ndarray,
    pen: int,
    eps: float,
) -> None:
    """Draw depth-tested segments into a binary image, in place.

    seg_xy: (m, 2, 2) endpoints in pixel space, seg_d: (m, 2) endpoint
    depths.  A covered pixel is inked when the segment depth is within
    ``eps`` of the z-buffer front surface.  Pen width 1 rounds to the
    nearest pixel; width w >= 2 stamps a w x w block anchored at floor.
    """
    size = img.shape[0]
    for i in range(seg_xy.shape[0]):
        x0, y0 = seg_xy[i, 0]
        x1, y1 = seg_xy[i, 1]
        d0, d1 = seg_d[i]
        length = np.hypot(x1 - x0, y1 - y0)
        n = max(1, int(np.ceil(length * 2.0)))
        for k in range(n + 1):
            t = k / n
            x = x0 + (x1 - x0) * t
            y = y0 + (y1 - y0) * t
            d = d0 + (d1 - d0) * t
            if pen <= 1:
                cc = int(np.floor(x + 0.5))
                rr = int(np.floor(y + 0.5))
                if 0 <= rr < size and 0 <= cc < size and zbuf[rr, cc] <= d + eps:
                    img[rr, cc] = 1
            else:
                cb = int(np.floor(x))
                rb = int(np.floor(y))
                for dr in range(pen):
                    for dc in range(pen):
                        rr = rb + dr
                        cc = cb + dc
                        if 0 <= rr < size and 0 <= cc < size and zbuf[rr, cc] <= d + eps:
                            img[rr, cc] = 1


def _neighbours(img: np.ndarray):
    """Padded clockwise 8-neighbourhood P2..P9 of every interior pixel."""
    p = np.pad(img, 1)
    p2 = p[:-2, 1:-1]
    p3 = p[:-2, 2:]
    p4 = p[1:-1, 2:]
    p5 = p[2:, 2:]
    p6 = p[2:, 1:-1]
    p7 = p[2:, :-2]
    p8 = p[1:-1, :-2]
    p9 = p[:-2, :-2]
    return p2, p3, p4, p5, p6, p7, p8, p9


def thin_pass(img: np.ndarray) -> bool:
    """One synchronous thinning pass (two subiterations), in place.

    Returns True when any pixel was removed.
    """
    changed = False
    for step in (0, 1):
        p2, p3, p4, p5, p6, p7, p8, p9 = _neighbours(img)
        seq = np.stack([p2, p3, p4, p5, p6, p7, p8, p9, p2], axis=0).astype(np.int8)
        b = seq[:-1].sum(axis=0)
        a = ((seq[:-1] == 0) & (seq[1:] == 1)).sum(axis=0)
        cond = (img == 1) & (b >= 2) & (b <= 6) & (a == 1)
        if step == 0:
            cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
        else:
            cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
        if cond.any():
            img[cond] = 0
            changed = True
    return changed


def _crossing_number(img: np.ndarray, r: int, c: int) -> int:
    n = [
        img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
        img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1],
    ]
    count = 0
    for k in range(8):
        if n[k] == 0 and n[(k + 1) % 8] == 1:
            count += 1
    return count


def remove_blocks(img: np.ndarray) -> bool:
    """Break remaining 2x2 ink blocks, in place; scan order, sequential.

    Deletes the first pixel of each block whose removal keeps its
    neighbourhood connected (crossing number 1).  Returns True when any
    pixel was removed.
    """
    h, w = img.shape
    blocks = (img[:-1, :-1] == 1) & (img[:-1, 1:] == 1) & (img[1:, :-1] == 1) & (img[1:, 1:] == 1)
    rows, cols = np.nonzero(blocks)
    changed = False
    for r, c in zip(rows.tolist(), cols.tolist()):
        if not (img[r, c] and img[r, c + 1] and img[r + 1, c] and img[r + 1, c + 1]):
            continue
        for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
            if 1 <= rr < h - 1 and 1 <= cc < w - 1 and _crossing_number(img, rr, cc) == 1:
                img[rr, cc] = 0
                changed = True
                break
    return changed


def _dot3(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[:, 0] * v[0] + u[:, 1] * v[1] + u[:, 2] * v[2]


def closest_point_tris(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Closest surface point on a triangle soup for each query point.

    points: (p, 3), tris: (t, 3, 3).  Returns (p, 4): min distance and
    the closest point.  Vectorized over points, one triangle at a time;
    closest-point region tests applied in the same first-match order as
    the scalar kernel.
    """
    p = np.asarray(points, dtype=np.float64)
    best = np.full(p.shape[0], np.inf)
    best_pt = np.zeros_like(p)
    for t in range(tris.shape[0]):
        a, b, c = tris[t, 0], tris[t, 1], tris[t, 2]
        ab = b - a
        ac = c - a
        bc = c - b
        d1 = _dot3(p - a, ab)
        d2 = _dot3(p - a, ac)
        d3 = _dot3(p - b, ab)
        d4 = _dot3(p - b, ac)
        d5 = _dot3(p - c, ab)
        d6 = _dot3(p - c, ac)
        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2

        def safe_div(num, den):
            safe = np.where(den == 0.0, 1.0, den)
            return np.where(den == 0.0, 0.0, num / safe)

        t_ab = safe_div(d1, d1 - d3)
        t_ac = safe_div(d2, d2 - d6)
        t_bc = safe_div(d4 - d3, (d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v_in = safe_div(vb, denom)
        w_in = safe_div(vc, denom)

        conds = [
            (d1 <= 0.0) & (d2 <= 0.0),                     # vertex A
            (d3 >= 0.0) & (d4 <= d3),                      # vertex B
            (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0),       # edge AB
            (d6 >= 0.0) & (d5 <= d6),                      # vertex C
            (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0),       # edge AC
            (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0),  # edge BC
        ]
        closest = np.empty_like(p)
        for axis in range(3):
            choices = [
                np.full(p.shape[0], a[axis]),
                np.full(p.shape[0], b[axis]),
                a[axis] + t_ab * ab[axis],
                np.full(p.shape[0], c[axis]),
                a[axis] + t_ac * ac[axis],
                b[axis] + t_bc * bc[axis],
            ]
            interior = a[axis] + v_in * ab[axis] + w_in * ac[axis]
            closest[:, axis] = np.select(conds, choices, default=interior)
        diff = p - closest
        d = np.sqrt(diff[:, 0] ** 2 + diff[:, 1] ** 2 + diff[:, 2] ** 2)
        better = d < best
        best[better] = d[better]
        best_pt[better] = closest[better]
    return np.concatenate([best[:, None], best_pt], axis=1)


def min_point_tri_dist(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Min distance from each point to a triangle soup."""
    return closest_point_tris(points, tris)[:, 0]
