"""Numba-jitted hot kernels.

Each function mirrors its ``_numpy`` counterpart operation for
operation; the parity tests compare outputs across backends.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def zbuffer_triangles(xy: np.ndarray, depth: np.ndarray, size: int) -> np.ndarray:
    zbuf = np.full((size, size), -np.inf, dtype=np.float64)
    for i in range(xy.shape[0]):
        x0, y0 = xy[i, 0, 0], xy[i, 0, 1]
        x1, y1 = xy[i, 1, 0], xy[i, 1, 1]
        x2, y2 = xy[i, 2, 0], xy[i, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        cmin = max(0, int(np.floor(min(x0, min(x1, x2)))))
        cmax = min(size - 1, int(np.ceil(max(x0, max(x1, x2)))))
        rmin = max(0, int(np.floor(min(y0, min(y1, y2)))))
        rmax = min(size - 1, int(np.ceil(max(y0, max(y1, y2)))))
        for rr in range(rmin, rmax + 1):
            r = float(rr)
            for cc in range(cmin, cmax + 1):
                c = float(cc)
                w0 = (x2 - x1) * (r - y1) - (y2 - y1) * (c - x1)
                w1 = (x0 - x2) * (r - y2) - (y0 - y2) * (c - x2)
                w2 = (x1 - x0) * (r - y0) - (y1 - y0) * (c - x0)
                if area < 0.0:
                    inside = w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0
                else:
                    inside = w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0
                if inside:
                    d = (w0 * depth[i, 0] + w1 * depth[i, 1] + w2 * depth[i, 2]) / area
                    if d > zbuf[rr, cc]:
                        zbuf[rr, cc] = d
    return zbuf


@njit(cache=True)
def draw_segments(
    img: np.ndarray,
    zbuf: np.ndarray,
    seg_xy: np.ndarray,
    seg_d: np.ndarray,
    pen: int,
    eps: float,
) -> None:
    size = img.shape[0]
    for i in range(seg_xy.shape[0]):
        x0, y0 = seg_xy[i, 0, 0], seg_xy[i, 0, 1]
        x1, y1 = seg_xy[i, 1, 0], seg_xy[i, 1, 1]
        d0, d1 = seg_d[i, 0], seg_d[i, 1]
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


@njit(cache=True)
def _thin_subiter(img: np.ndarray, step: int) -> bool:
    h, w = img.shape
    marks = np.zeros((h, w), dtype=np.uint8)
    changed = False
    for r in range(h):
        for c in range(w):
            if img[r, c] != 1:
                continue
            p2 = img[r - 1, c] if r > 0 else 0
            p3 = img[r - 1, c + 1] if r > 0 and c < w - 1 else 0
            p4 = img[r, c + 1] if c < w - 1 else 0
            p5 = img[r + 1, c + 1] if r < h - 1 and c < w - 1 else 0
            p6 = img[r + 1, c] if r < h - 1 else 0
            p7 = img[r + 1, c - 1] if r < h - 1 and c > 0 else 0
            p8 = img[r, c - 1] if c > 0 else 0
            p9 = img[r - 1, c - 1] if r > 0 and c > 0 else 0
            b = int(p2) + int(p3) + int(p4) + int(p5) + int(p6) + int(p7) + int(p8) + int(p9)
            if b < 2 or b > 6:
                continue
            a = 0
            if p2 == 0 and p3 == 1:
                a += 1
            if p3 == 0 and p4 == 1:
                a += 1
            if p4 == 0 and p5 == 1:
                a += 1
            if p5 == 0 and p6 == 1:
                a += 1
            if p6 == 0 and p7 == 1:
                a += 1
            if p7 == 0 and p8 == 1:
                a += 1
            if p8 == 0 and p9 == 1:
                a += 1
            if p9 == 0 and p2 == 1:
                a += 1
            if a != 1:
                continue
            if step == 0:
                if p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0:
                    marks[r, c] = 1
                    changed = True
            else:
                if p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0:
                    marks[r, c] = 1
                    changed = True
    if changed:
        for r in range(h):
            for c in range(w):
                if marks[r, c]:
                    img[r, c] = 0
    return changed


@njit(cache=True)
def thin_pass(img: np.ndarray) -> bool:
    c0 = _thin_subiter(img, 0)
    c1 = _thin_subiter(img, 1)
    return c0 or c1


@njit(cache=True)
def _crossing_number(img: np.ndarray, r: int, c: int) -> int:
    n0 = img[r - 1, c]
    n1 = img[r - 1, c + 1]
    n2 = img[r, c + 1]
    n3 = img[r + 1, c + 1]
    n4 = img[r + 1, c]
    n5 = img[r + 1, c - 1]
    n6 = img[r, c - 1]
    n7 = img[r - 1, c - 1]
    count = 0
    if n0 == 0 and n1 == 1:
        count += 1
    if n1 == 0 and n2 == 1:
        count += 1
    if n2 == 0 and n3 == 1:
        count += 1
    if n3 == 0 and n4 == 1:
        count += 1
    if n4 == 0 and n5 == 1:
        count += 1
    if n5 == 0 and n6 == 1:
        count += 1
    if n6 == 0 and n7 == 1:
        count += 1
    if n7 == 0 and n0 == 1:
        count += 1
    return count


@njit(cache=True)
def remove_blocks(img: np.ndarray) -> bool:
    h, w = img.shape
    changed = False
    for r in range(h - 1):
        for c in range(w - 1):
            if not (img[r, c] and img[r, c + 1] and img[r + 1, c] and img[r + 1, c + 1]):
                continue
            for k in range(4):
                rr = r + (k // 2)
                cc = c + (k % 2)
                if 1 <= rr < h - 1 and 1 <= cc < w - 1 and _crossing_number(img, rr, cc) == 1:
                    img[rr, cc] = 0
                    changed = True
                    break
    return changed


@njit(cache=True)
def closest_point_tris(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    np_pts = points.shape[0]
    out = np.zeros((np_pts, 4))
    out[:, 0] = np.inf
    for ip in range(np_pts):
        px, py, pz = points[ip, 0], points[ip, 1], points[ip, 2]
        for it in range(tris.shape[0]):
            ax, ay, az = tris[it, 0, 0], tris[it, 0, 1], tris[it, 0, 2]
            bx, by, bz = tris[it, 1, 0], tris[it, 1, 1], tris[it, 1, 2]
            cx, cy, cz = tris[it, 2, 0], tris[it, 2, 1], tris[it, 2, 2]
            abx, aby, abz = bx - ax, by - ay, bz - az
            acx, acy, acz = cx - ax, cy - ay, cz - az
            d1 = (px - ax) * abx + (py - ay) * aby + (pz - az) * abz
            d2 = (px - ax) * acx + (py - ay) * acy + (pz - az) * acz
            d3 = (px - bx) * abx + (py - by) * aby + (pz - bz) * abz
            d4 = (px - bx) * acx + (py - by) * acy + (pz - bz) * acz
            d5 = (px - cx) * abx + (py - cy) * aby + (pz - cz) * abz
            d6 = (px - cx) * acx + (py - cy) * acy + (pz - cz) * acz
            va = d3 * d6 - d5 * d4
            vb = d5 * d2 - d1 * d6
            vc = d1 * d4 - d3 * d2
            if d1 <= 0.0 and d2 <= 0.0:
                qx, qy, qz = ax, ay, az
            elif d3 >= 0.0 and d4 <= d3:
                qx, qy, qz = bx, by, bz
            elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                den = d1 - d3
                t = 0.0 if den == 0.0 else d1 / den
                qx, qy, qz = ax + t * abx, ay + t * aby, az + t * abz
            elif d6 >= 0.0 and d5 <= d6:
                qx, qy, qz = cx, cy, cz
            elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                den = d2 - d6
                t = 0.0 if den == 0.0 else d2 / den
                qx, qy, qz = ax + t * acx, ay + t * acy, az + t * acz
            elif va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
                den = (d4 - d3) + (d5 - d6)
                t = 0.0 if den == 0.0 else (d4 - d3) / den
                qx, qy, qz = bx + t * (cx - bx), by + t * (cy - by), bz + t * (cz - bz)
            else:
                den = va + vb + vc
                v = 0.0 if den == 0.0 else vb / den
                w = 0.0 if den == 0.0 else vc / den
                qx = ax + v * abx + w * acx
                qy = ay + v * aby + w * acy
                qz = az + v * abz + w * acz
            dx, dy, dz = px - qx, py - qy, pz - qz
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d < out[ip, 0]:
                out[ip, 0] = d
                out[ip, 1] = qx
                out[ip, 2] = qy
                out[ip, 3] = qz
    return out


@njit(cache=True)
def min_point_tri_dist(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    return closest_point_tris(points, tris)[:, 0]
