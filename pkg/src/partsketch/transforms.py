"""Small 3D transform helpers: affine matrices and reflection planes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def identity() -> np.ndarray:
    return np.eye(4)


def translation(offset: np.ndarray) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = offset
    return m


def scale_in_frame(axes: np.ndarray, factors: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Anisotropic scale along the rows of ``axes`` about ``center``."""
    a = np.asarray(axes, dtype=np.float64)
    s = a.T @ np.diag(np.asarray(factors, dtype=np.float64)) @ a
    m = np.eye(4)
    m[:3, :3] = s
    m[:3, 3] = center - s @ center
    return m


def apply_affine(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(points)
    return pts @ matrix[:3, :3].T + matrix[:3, 3]


@dataclass(frozen=True)
class Plane:
    """Plane through ``point`` with unit ``normal``."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=np.float64)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("plane normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.point) @ self.normal

    def reflect_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        d = self.signed_distance(pts)
        return pts - 2.0 * d[:, None] * self.normal

    def reflection_matrix(self) -> np.ndarray:
        n = self.normal
        r = np.eye(3) - 2.0 * np.outer(n, n)
        m = np.eye(4)
        m[:3, :3] = r
        m[:3, 3] = self.point - r @ self.point
        return m

    def transformed(self, matrix: np.ndarray) -> "Plane":
        """Image of the plane under an affine map (normal via inverse transpose)."""
        lin = matrix[:3, :3]
        point = lin @ self.point + matrix[:3, 3]
        normal = np.linalg.inv(lin).T @ self.normal
        return Plane(point, normal)
