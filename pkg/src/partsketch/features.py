"""Local line features: oriented Gabor responses averaged over cells.

Every (thinned) line image is described by one 64-vector per keypoint
on a regular 32x32 grid: 4 filter orientations x 4x4 cells of mean
rectified response around the keypoint.  Keypoints whose window holds
no ink yield the zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .render import LineImage


@dataclass
class GaborBank:
    """Four oriented, DC-free, L2-normalized Gabor kernels.

    ``cell_size`` doubles as the carrier wavelength; the kernel radius
    is twice the cell size.  Orientations are the *line* directions the
    filters respond to (0, 45, 90, 135 degrees in image space).
    """

    cell_size: int
    bandwidth: float = 1.0
    aspect: float = 1.0
    kernels: np.ndarray = field(init=False)  # (4, k, k)

    def __post_init__(self) -> None:
        wavelength = float(self.cell_size)
        radius = 2 * self.cell_size
        b = self.bandwidth
        sigma = wavelength / np.pi * np.sqrt(np.log(2) / 2.0) * (2.0**b + 1) / (2.0**b - 1)
        coords = np.arange(-radius, radius + 1, dtype=np.float64)
        x, y = np.meshgrid(coords, coords)  # x = col, y = row
        ks = []
        for theta in np.deg2rad([0.0, 45.0, 90.0, 135.0]):
            along = x * np.cos(theta) + y * np.sin(theta)
            across = -x * np.sin(theta) + y * np.cos(theta)
            env = np.exp(-(self.aspect**2 * along**2 + across**2) / (2.0 * sigma**2))
            k = env * np.cos(2.0 * np.pi * across / wavelength)
            k -= k.mean()
            k /= np.linalg.norm(k)
            ks.append(k)
        self.kernels = np.stack(ks)
        self._kernel_ffts: dict[int, tuple[int, np.ndarray]] = {}

    @property
    def radius(self) -> int:
        return (self.kernels.shape[1] - 1) // 2

    def responses(self, pix: np.ndarray) -> np.ndarray:
        """|convolution| with each kernel ('same' mode), shape (4, h, w).

        One shared forward FFT per image; kernel FFTs are cached per
        image size.
        """
        size = pix.shape[0]
        k = self.kernels.shape[1]
        if size not in self._kernel_ffts:
            n = sfft.next_fast_len(size + k - 1)
            kf = np.stack([sfft.rfft2(kern, s=(n, n)) for kern in self.kernels])
            self._kernel_ffts[size] = (n, kf)
        n, kf = self._kernel_ffts[size]
        f = sfft.rfft2(pix, s=(n, n))
        lo = (k - 1) // 2
        out = np.empty((len(self.kernels), size, size), dtype=np.float64)
        for o in range(len(self.kernels)):
            full = sfft.irfft2(f * kf[o], s=(n, n))
            np.abs(full[lo : lo + size, lo : lo + size], out=out[o])
        return out


def _integral(a: np.ndarray) -> np.ndarray:
    s = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=s[1:, 1:])
    return s


def _window_sums(s: np.ndarray, r0, r1, c0, c1) -> np.ndarray:
    return s[r1, c1] - s[r0, c1] - s[r1, c0] + s[r0, c0]


def extract_galf(img: LineImage, bank: GaborBank, grid: int = 32, cells: int = 4) -> np.ndarray:
    """Keypoint descriptors, shape (grid*grid, orientations*cells*cells).

    Row ``i * grid + j`` is the keypoint at grid position (i, j); its
    window is ``cells x cells`` cells centered on the keypoint, and each
    entry is the mean absolute Gabor response over one cell (fixed cell
    area as divisor, zero padding at borders).  Windows with no input
    ink give zero rows.
    """
    size = img.size
    cell = size // grid
    pix = img.pixels.astype(np.float64)
    responses = bank.responses(pix)

    # cell boundaries for every keypoint, clipped to the image
    centers = (np.arange(grid) + 0.5) * cell
    starts = np.rint(centers - (cells / 2.0) * cell).astype(np.int64)
    offs = np.arange(cells) * cell
    lo = starts[:, None] + offs[None, :]          # (grid, cells)
    hi = lo + cell
    lo_c = np.clip(lo, 0, size)
    hi_c = np.clip(hi, 0, size)

    r0 = lo_c[:, None, :, None]
    r1 = hi_c[:, None, :, None]
    c0 = lo_c[None, :, None, :]
    c1 = hi_c[None, :, None, :]
    r0, r1, c0, c1 = np.broadcast_arrays(
        np.broadcast_to(r0, (grid, grid, cells, cells)),
        np.broadcast_to(r1, (grid, grid, cells, cells)),
        np.broadcast_to(c0, (grid, grid, cells, cells)),
        np.broadcast_to(c1, (grid, grid, cells, cells)),
    )

    area = float(cell * cell)
    feats = np.empty((len(responses), grid, grid, cells, cells), dtype=np.float64)
    for o, resp in enumerate(responses):
        s = _integral(resp)
        feats[o] = _window_sums(s, r0, r1, c0, c1) / area

    # blank-window mask from the raw ink
    ink = _integral(pix)
    w_r0 = np.clip(starts, 0, size)[:, None]
    w_r1 = np.clip(starts + cells * cell, 0, size)[:, None]
    w_c0 = w_r0.T
    w_c1 = w_r1.T
    ink_sum = _window_sums(ink, w_r0, w_r1, w_c0, w_c1)
    feats[:, ink_sum <= 0.0] = 0.0

    out = feats.transpose(1, 2, 0, 3, 4).reshape(grid * grid, -1)
    return np.ascontiguousarray(out)


def detail_crop(img: LineImage) -> LineImage:
    """Center window of 2/3 the ink bounding-box area, rescaled to full size.

    The window is axis-aligned, centered at the bounding-box center,
    sides scaled by sqrt(2/3) per dimension; blank input gives blank
    output.  Output is rescaled nearest-neighbor and should be
    re-thinned before feature extraction.
    """
    size = img.size
    if img.is_blank():
        return LineImage(np.zeros_like(img.pixels), img.view, img.part_id)
    rows = np.nonzero(img.pixels.any(axis=1))[0]
    cols = np.nonzero(img.pixels.any(axis=0))[0]
    r_lo, r_hi = int(rows[0]), int(rows[-1]) + 1
    c_lo, c_hi = int(cols[0]), int(cols[-1]) + 1
    factor = np.sqrt(2.0 / 3.0)
    half_r = max(1.0, (r_hi - r_lo) * factor / 2.0)
    half_c = max(1.0, (c_hi - c_lo) * factor / 2.0)
    rc = (r_lo + r_hi) / 2.0
    cc = (c_lo + c_hi) / 2.0
    wr0 = max(0, int(np.floor(rc - half_r)))
    wr1 = min(size, int(np.ceil(rc + half_r)))
    wc0 = max(0, int(np.floor(cc - half_c)))
    wc1 = min(size, int(np.ceil(cc + half_c)))
    crop = img.pixels[wr0:wr1, wc0:wc1]

    src_r = np.minimum(((np.arange(size) + 0.5) * crop.shape[0] / size).astype(np.int64), crop.shape[0] - 1)
    src_c = np.minimum(((np.arange(size) + 0.5) * crop.shape[1] / size).astype(np.int64), crop.shape[1] - 1)
    scaled = crop[src_r[:, None], src_c[None, :]]
    return LineImage((scaled > 0).astype(np.uint8), img.view, img.part_id)


__all__ = ["GaborBank", "extract_galf", "detail_crop"]
