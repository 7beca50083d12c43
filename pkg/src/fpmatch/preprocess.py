"""Grayscale fingerprint raster -> one-pixel-wide ridge skeleton plus ROI mask.

Rasters are plain 2-D numpy arrays indexed ``[row, col]`` (``y``, ``x``):

* grayscale: ``uint8`` intensities 0-255, ridges dark;
* binary / skeleton: ``uint8`` in {0, 1}, 1 = ridge.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import EmptyRoi, ZeroVarianceImage

logger = logging.getLogger(__name__)


@dataclass
class RoiMask:
    mask: np.ndarray  # bool, True = foreground
    block_size: int

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @classmethod
    def full(cls, shape, block_size=16) -> "RoiMask":
        return cls(np.ones(shape, dtype=bool), block_size)


def _blocks(shape, block_size):
    h, w = shape
    for r0 in range(0, h, block_size):
        for c0 in range(0, w, block_size):
            yield r0 // block_size, c0 // block_size, slice(r0, r0 + block_size), slice(c0, c0 + block_size)


def normalize(img: np.ndarray, target_mean: float = 128.0, target_var: float = 2000.0) -> np.ndarray:
    """Shift and scale intensities to the requested mean and variance.

    A constant image has no variance to rescale; it is returned filled with
    ``target_mean`` and a :class:`ZeroVarianceImage` warning is issued.
    """
    if target_var <= 0:
        raise ValueError("target_var must be positive")
    data = np.asarray(img, dtype=np.float64)
    mean = data.mean()
    var = data.var()
    if var == 0:
        warnings.warn("constant image; variance cannot be normalized", ZeroVarianceImage, stacklevel=2)
        return np.full(data.shape, int(np.clip(round(target_mean), 0, 255)), dtype=np.uint8)
    out = target_mean + (data - mean) * np.sqrt(target_var / var)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def block_variance(img: np.ndarray, block_size: int) -> np.ndarray:
    h, w = img.shape
    rows = -(-h // block_size)
    cols = -(-w // block_size)
    out = np.zeros((rows, cols))
    data = np.asarray(img, dtype=np.float64)
    for br, bc, rs, cs in _blocks(img.shape, block_size):
        out[br, bc] = data[rs, cs].var()
    return out


def segment_roi(img: np.ndarray, block_size: int = 16, var_threshold: float = 100.0) -> RoiMask:
    """Foreground = the largest 4-connected group of blocks whose variance passes."""
    if block_size < 4:
        raise ValueError("block_size must be >= 4")
    fg = block_variance(img, block_size) >= var_threshold
    if not fg.any():
        raise EmptyRoi("no block reaches the variance threshold")
    labels, count = ndimage.label(fg)
    if count > 1:
        sizes = np.bincount(labels.ravel())[1:]
        keep = int(np.argmax(sizes)) + 1  # first (raster order) among equal sizes
        fg = labels == keep
    mask = np.kron(fg, np.ones((block_size, block_size), dtype=bool))[: img.shape[0], : img.shape[1]]
    return RoiMask(mask.astype(bool), block_size)


def binarize(img: np.ndarray, roi: RoiMask, block_size: int = 16) -> np.ndarray:
    if roi.mask.shape != img.shape:
        raise ValueError("ROI mask does not match image dimensions")
    data = np.asarray(img, dtype=np.float64)
    out = np.zeros(img.shape, dtype=np.uint8)
    for _, _, rs, cs in _blocks(img.shape, block_size):
        block = data[rs, cs]
        # ties go to valley
        out[rs, cs] = block < block.mean()
    out[~roi.mask] = 0
    return out


# Neighbour offsets (drow, dcol) in Zhang-Suen naming: P2=N, P3=NE, ..., P9=NW.
_ZS_OFFSETS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _zs_tables():
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        p = [(code >> k) & 1 for k in range(8)]  # p[0]=P2 ... p[7]=P9
        b = sum(p)
        a = sum(1 for k in range(8) if p[k] == 0 and p[(k + 1) % 8] == 1)
        if not (2 <= b <= 6 and a == 1):
            continue
        p2, p4, p6, p8 = p[0], p[2], p[4], p[6]
        first[code] = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        second[code] = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
    return first, second


_ZS_FIRST, _ZS_SECOND = _zs_tables()


def _neighbour_code(img: np.ndarray) -> np.ndarray:
    padded = np.pad(img, 1)
    h, w = img.shape
    code = np.zeros(img.shape, dtype=np.int32)
    for k, (dr, dc) in enumerate(_ZS_OFFSETS):
        code |= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w].astype(np.int32) << k
    return code


def _full_blocks(img: np.ndarray) -> np.ndarray:
    """Boolean map of top-left corners of all-ridge 2x2 blocks."""
    out = np.zeros(img.shape, dtype=bool)
    out[:-1, :-1] = (img[:-1, :-1] & img[:-1, 1:] & img[1:, :-1] & img[1:, 1:]).astype(bool)
    return out


def _zs_pass(img: np.ndarray) -> bool:
    changed = False
    for table in (_ZS_FIRST, _ZS_SECOND):
        marked = (img == 1) & table[_neighbour_code(img)]
        # a fully marked 2x2 block would vanish; keep its bottom-right pixel
        blocks = _full_blocks(marked.astype(np.uint8))
        if blocks.any():
            rr, cc = np.nonzero(blocks)
            marked[rr + 1, cc + 1] = False
        if marked.any():
            img[marked] = 0
            changed = True
    return changed


def _is_simple(img: np.ndarray, r: int, c: int) -> bool:
    """Yokoi 8-connectivity number == 1 and the pixel is not an end point."""
    h, w = img.shape

    def at(dr, dc):
        rr, cc = r + dr, c + dc
        return int(img[rr, cc]) if 0 <= rr < h and 0 <= cc < w else 0

    # counter-clockwise from east
    ring = [at(0, 1), at(-1, 1), at(-1, 0), at(-1, -1), at(0, -1), at(1, -1), at(1, 0), at(1, 1)]
    if sum(ring) < 2:
        return False
    inv = [1 - v for v in ring] + [1 - ring[0]]
    c8 = sum(inv[k] - inv[k] * inv[k + 1] * inv[k + 2] for k in (0, 2, 4, 6))
    return c8 == 1


def _clear_blocks(img: np.ndarray) -> bool:
    changed = False
    for r, c in zip(*np.nonzero(_full_blocks(img))):
        for dr, dc in ((0, 0), (0, 1), (1, 0), (1, 1)):
            if not img[r : r + 2, c : c + 2].all():
                break
            if _is_simple(img, r + dr, c + dc):
                img[r + dr, c + dc] = 0
                changed = True
                break
    return changed


def thin(binary: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning to a fixpoint, then removal of leftover 2x2 blocks.

    The two stages alternate until neither changes the raster, so the result
    is a fixpoint of the whole procedure and ``thin`` is idempotent.
    """
    img = (np.asarray(binary) > 0).astype(np.uint8)
    while True:
        while _zs_pass(img):
            pass
        if not _clear_blocks(img):
            return img


def is_one_pixel_wide(skel: np.ndarray) -> bool:
    return not _full_blocks(np.asarray(skel, dtype=np.uint8)).any()


def skeletonize(gray: np.ndarray, block_size: int = 16, var_threshold: float = 100.0,
                target_mean: float = 128.0, target_var: float = 2000.0):
    """Run normalize -> segment_roi -> binarize -> thin; returns ``(skeleton, roi)``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceImage)
        norm = normalize(gray, target_mean, target_var)
    roi = segment_roi(norm, block_size, var_threshold)
    return thin(binarize(norm, roi, block_size)), roi


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im.convert("L"), dtype=np.uint8)


def write_pgm(path, raster: np.ndarray) -> None:
    """Write a grayscale raster, or a {0,1} raster scaled to {0,255}, as binary PGM."""
    data = np.asarray(raster)
    if data.max(initial=0) <= 1:
        data = data * 255
    Image.fromarray(data.astype(np.uint8), mode="L").save(Path(path), format="PPM")
