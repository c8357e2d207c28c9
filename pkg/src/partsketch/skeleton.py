"""Binary image thinning to unit line width (Zhang-Suen)."""

from __future__ import annotations

import numpy as np

from . import kernels
from .render import LineImage

_MAX_PASSES = 10000


def skeletonize_pixels(pixels: np.ndarray) -> np.ndarray:
    """Thin a binary uint8 image to 1-pixel-wide lines.

    Zhang-Suen passes run to convergence, then any surviving 2x2 ink
    blocks are broken by deleting removable pixels; the loop repeats
    until the image is a fixpoint, which makes the whole operation
    idempotent.  Thinning never adds ink.
    """
    img = np.ascontiguousarray(pixels, dtype=np.uint8).copy()
    for _ in range(_MAX_PASSES):
        changed = False
        while kernels.thin_pass(img):
            changed = True
        if kernels.remove_blocks(img):
            changed = True
        if not changed:
            break
    return img


def skeletonize(image: LineImage) -> LineImage:
    return LineImage(skeletonize_pixels(image.pixels), image.view, image.part_id)


__all__ = ["skeletonize", "skeletonize_pixels"]
