"""
Image sampling helpers shared by the texture, fractal and embedding modules.
"""

from typing import Tuple

import numpy as np
from scipy import ndimage

# Offsets closer than this to an integer are snapped, so that cos(90 deg) and
# friends sample exact pixel values.
SNAP_DECIMALS = 12


def snap(value: float) -> float:
    return float(np.round(value, SNAP_DECIMALS)) + 0.0


def bilinear_support(shape: Tuple[int, int], rows: np.ndarray, cols: np.ndarray):
    """
    Split sampling positions into integer corners and fractional weights.

    Returns (r0, r1, c0, c1, fr, fc); r1/c1 are clipped to the grid, which is
    harmless because their weight is zero whenever they would leave it.
    """
    height, width = shape
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    fr = rows - r0
    fc = cols - c0
    r1 = np.minimum(r0 + 1, height - 1)
    c1 = np.minimum(c0 + 1, width - 1)
    return r0, r1, c0, c1, fr, fc


def bilinear(pixels: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """
    Sample an image at fractional positions with bilinear interpolation.

    Interpolation is written in the lerp form, so a sample whose fractional
    parts are zero returns the pixel value bit-exactly and a sample over four
    equal pixels returns that value bit-exactly.
    """
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    r0, r1, c0, c1, fr, fc = bilinear_support(pixels.shape, rows, cols)
    top = pixels[r0, c0] + fc * (pixels[r0, c1] - pixels[r0, c0])
    bottom = pixels[r1, c0] + fc * (pixels[r1, c1] - pixels[r1, c0])
    return top + fr * (bottom - top)


def support_inside(mask: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """True where every pixel with nonzero bilinear weight lies inside the mask."""
    r0, r1, c0, c1, fr, fc = bilinear_support(mask.shape, rows, cols)
    ok = mask[r0, c0].copy()
    ok &= (fc == 0) | mask[r0, c1]
    ok &= (fr == 0) | mask[r1, c0]
    ok &= (fr == 0) | (fc == 0) | mask[r1, c1]
    return ok


def erode_square(mask: np.ndarray, radius: int) -> np.ndarray:
    """Pixels whose (2*radius+1)^2 neighbourhood lies inside the mask and the image."""
    if radius <= 0:
        return mask.copy()
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_erosion(mask, structure=structure, border_value=0)


def downsample_half(pixels: np.ndarray) -> np.ndarray:
    """x0.5 down-sampling by 2x2 block averaging (odd trailing row/column dropped)."""
    height, width = (pixels.shape[0] // 2) * 2, (pixels.shape[1] // 2) * 2
    cropped = pixels[:height, :width]
    return cropped.reshape(height // 2, 2, width // 2, 2).mean(axis=(1, 3))
