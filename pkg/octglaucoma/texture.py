"""
Texture Descriptor Module

This module encodes the texture of the retina region of a B-scan.

Features:
- Gray-level quantization restricted to a region
- Symmetric, normalized gray-level co-occurrence matrices (GLCM) for
  (row-shift, col-shift) offsets; only pairs with both pixels in the region count
- Seven GLCM statistics: contrast, correlation, energy, homogeneity, entropy,
  mean and standard deviation
- Rotation-invariant uniform local binary patterns (riu2) with bilinear
  circular sampling, the local variance (VAR) of the same samples, and the
  VAR-weighted LBP histogram (LBPV)

Pixels whose circular neighbourhood leaves the region are excluded rather
than padded.

Feature names: glcm.<stat>.o1, glcm.<stat>.o2, lbpv.b0..lbpv.b9 and
lbpv.p<P>r<R>.b<k> for additional (P, R) pairs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, EmptyPairsError, EmptyRegionError
from .imaging import bilinear, erode_square, snap
from .models import GrayImage, SegmentedScan

logger = logging.getLogger(__name__)

GLCM_STATS = ('contrast', 'correlation', 'energy', 'homogeneity', 'entropy', 'mean', 'std')
DEFAULT_OFFSETS = ((-2, 0), (-2, 2))
INVALID = -1


@dataclass(frozen=True)
class Glcm:
    """
    Normalized, symmetric co-occurrence matrix.

    Attributes:
        levels (int): Number of gray levels L
        offset (Tuple[int, int]): (row-shift, col-shift)
        matrix (np.ndarray): L x L probabilities summing to 1
        pairs (int): Number of ordered pixel pairs counted before symmetrization
    """
    levels: int
    offset: Tuple[int, int]
    matrix: np.ndarray
    pairs: int


@dataclass(frozen=True)
class LbpParams:
    """Circular neighbourhood: P samples on a circle of radius R."""
    P: int = 8
    R: float = 1

    def __post_init__(self):
        if self.P < 4:
            raise ValueError('P must be at least 4')
        if self.R < 1:
            raise ValueError('R must be at least 1')

    @property
    def n_bins(self) -> int:
        return self.P + 2

    def offsets(self) -> np.ndarray:
        """(P, 2) array of (row, col) sample offsets, counter-clockwise from the right."""
        angles = 2.0 * np.pi * np.arange(self.P) / self.P
        return np.array([[snap(-self.R * np.sin(a)), snap(self.R * np.cos(a))] for a in angles])


@dataclass(frozen=True)
class LbpvHistogram:
    """
    LBP histogram weighted by local variance.

    Attributes:
        bins (np.ndarray): P+2 weights, one per riu2 label
        normalized (bool): Whether bins were divided by their total
        degenerate (bool): True when the total variance is zero (bins all zero)
    """
    bins: np.ndarray
    normalized: bool
    degenerate: bool = False


def _pixels(image) -> np.ndarray:
    return image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)


def _check_region(pixels: np.ndarray, region: np.ndarray) -> np.ndarray:
    region = np.asarray(region, dtype=bool)
    if region.shape != pixels.shape:
        raise DimensionMismatchError(f"region {region.shape} does not match image {pixels.shape}")
    return region


def quantize(image, region: np.ndarray, levels: int = 8) -> np.ndarray:
    """
    Map in-region intensities to gray levels.

    level = floor(intensity * L / 256), clamped to [0, L-1]; pixels outside the
    region are marked -1.

    Raises:
        EmptyRegionError: If the region holds no pixel
    """
    if levels < 2:
        raise ValueError('levels must be at least 2')
    pixels = _pixels(image)
    region = _check_region(pixels, region)
    if not region.any():
        raise EmptyRegionError('region is empty')
    grid = np.clip(np.floor(pixels * levels / 256.0), 0, levels - 1).astype(np.int64)
    grid[~region] = INVALID
    return grid


def _offset_views(grid: np.ndarray, offset: Tuple[int, int]):
    """Aligned views of p and p + offset over the grid."""
    dr, dc = offset
    height, width = grid.shape
    r_lo, r_hi = max(0, -dr), min(height, height - dr)
    c_lo, c_hi = max(0, -dc), min(width, width - dc)
    if r_lo >= r_hi or c_lo >= c_hi:
        return grid[:0, :0], grid[:0, :0]
    first = grid[r_lo:r_hi, c_lo:c_hi]
    second = grid[r_lo + dr:r_hi + dr, c_lo + dc:c_hi + dc]
    return first, second


def glcm(quantized: np.ndarray, offset: Tuple[int, int], levels: int = 8) -> Glcm:
    """
    Build the symmetric normalized co-occurrence matrix for one offset.

    Every pair (p, p + offset) with both pixels valid is counted in both
    orders, then the matrix is divided by its total.

    Args:
        quantized: Label grid from quantize (-1 = outside the region)
        offset: (row-shift, col-shift), not (0, 0)
        levels: Number of gray levels

    Raises:
        EmptyPairsError: If no valid pair exists for the offset
    """
    if tuple(offset) == (0, 0):
        raise ValueError('offset must be nonzero')
    first, second = _offset_views(np.asarray(quantized), tuple(offset))
    valid = (first != INVALID) & (second != INVALID)
    a = first[valid]
    b = second[valid]
    if a.size == 0:
        raise EmptyPairsError(f"no in-region pixel pair for offset {tuple(offset)}")
    counts = np.bincount(a * levels + b, minlength=levels * levels).reshape(levels, levels)
    counts = counts + counts.T
    matrix = counts / counts.sum()
    return Glcm(levels=levels, offset=(int(offset[0]), int(offset[1])), matrix=matrix, pairs=int(a.size))


def glcm_features(g: Glcm) -> Dict[str, float]:
    """
    Compute the seven GLCM statistics.

    With p(i, j) the normalized entries and the marginal p_x (equal to p_y for a
    symmetric matrix): mean = sum_i i p_x(i), std^2 = sum_i (i - mean)^2 p_x(i),
    correlation = sum (i - mean)(j - mean) p / std^2 (0 when std^2 == 0),
    entropy uses log base 2 over nonzero entries.

    Returns:
        Dict[str, float]: Keys in GLCM_STATS order
    """
    p = g.matrix
    i, j = np.indices(p.shape)
    marginal = p.sum(axis=1)
    levels = np.arange(g.levels)
    mean = float(np.sum(levels * marginal))
    variance = float(np.sum((levels - mean) ** 2 * marginal))
    nonzero = p[p > 0]
    if variance > 0:
        correlation = float(np.sum((i - mean) * (j - mean) * p) / variance)
    else:
        correlation = 0.0
    return {
        'contrast': float(np.sum((i - j) ** 2 * p)),
        'correlation': correlation,
        'energy': float(np.sum(p ** 2)),
        'homogeneity': float(np.sum(p / (1.0 + np.abs(i - j)))),
        'entropy': float(-np.sum(nonzero * np.log2(nonzero))),
        'mean': mean,
        'std': math.sqrt(variance),
    }


def lbp_interior(region: np.ndarray, params: LbpParams) -> np.ndarray:
    """Region pixels whose whole circular neighbourhood lies in the image and region."""
    return erode_square(np.asarray(region, dtype=bool), int(math.ceil(params.R)))


def _circular_samples(pixels: np.ndarray, interior: np.ndarray, params: LbpParams) -> np.ndarray:
    """(P, n) neighbour intensities for the n interior pixels (row-major order)."""
    rows, cols = np.nonzero(interior)
    samples = np.empty((params.P, rows.size), dtype=np.float64)
    for k, (dr, dc) in enumerate(params.offsets()):
        samples[k] = bilinear(pixels, rows + dr, cols + dc)
    return samples


def _interior_or_raise(pixels: np.ndarray, region: np.ndarray, params: LbpParams) -> np.ndarray:
    region = _check_region(pixels, region)
    interior = lbp_interior(region, params)
    if not interior.any():
        raise EmptyRegionError(f"no pixel has its full radius-{params.R:g} neighbourhood inside the region")
    return interior


def lbp_riu2(image, region: np.ndarray, params: LbpParams = LbpParams()) -> np.ndarray:
    """
    Rotation-invariant uniform LBP labels.

    bit_p = 1 iff g_p - g_c >= 0. Patterns with at most two circular 0/1
    transitions are uniform and labelled with their number of ones (0..P);
    the rest share label P+1. Non-interior pixels are -1.

    Raises:
        EmptyRegionError: If the region interior is empty
    """
    pixels = _pixels(image)
    interior = _interior_or_raise(pixels, region, params)
    samples = _circular_samples(pixels, interior, params)
    center = pixels[interior]
    bits = (samples - center) >= 0
    transitions = np.count_nonzero(bits != np.roll(bits, -1, axis=0), axis=0)
    labels = np.where(transitions <= 2, bits.sum(axis=0), params.P + 1)
    grid = np.full(pixels.shape, INVALID, dtype=np.int64)
    grid[interior] = labels
    return grid


def local_variance(image, region: np.ndarray, params: LbpParams = LbpParams()) -> np.ndarray:
    """
    Rotation-invariant local variance of the circular samples.

    VAR = (1/P) sum_p (g_p - u)^2 with u the mean of the same samples.
    Non-interior pixels are NaN.
    """
    pixels = _pixels(image)
    interior = _interior_or_raise(pixels, region, params)
    samples = _circular_samples(pixels, interior, params)
    mean = samples.mean(axis=0)
    grid = np.full(pixels.shape, np.nan, dtype=np.float64)
    grid[interior] = ((samples - mean) ** 2).mean(axis=0)
    return grid


def lbpv_histogram(lbp: np.ndarray, var: np.ndarray, params: LbpParams = LbpParams()) -> LbpvHistogram:
    """
    Accumulate VAR per riu2 label and normalize by the total weight.

    Args:
        lbp: Label grid from lbp_riu2
        var: VAR grid from local_variance on the same image and region
        params: Neighbourhood used for both grids

    Returns:
        LbpvHistogram: P+2 normalized weights, or zeros with ``degenerate`` set
            when the total variance is zero

    Raises:
        DimensionMismatchError: If the grids are not aligned
    """
    lbp = np.asarray(lbp)
    var = np.asarray(var, dtype=np.float64)
    if lbp.shape != var.shape:
        raise DimensionMismatchError(f"LBP grid {lbp.shape} and VAR grid {var.shape} differ")
    valid = lbp != INVALID
    if not np.array_equal(valid, np.isfinite(var)):
        raise DimensionMismatchError('LBP and VAR grids cover different pixels')
    bins = np.bincount(lbp[valid], weights=var[valid], minlength=params.n_bins).astype(np.float64)
    if bins.size != params.n_bins:
        raise DimensionMismatchError(f"labels exceed {params.n_bins - 1} for P={params.P}")
    total = bins.sum()
    if total == 0:
        return LbpvHistogram(bins=np.zeros(params.n_bins), normalized=True, degenerate=True)
    return LbpvHistogram(bins=bins / total, normalized=True)


def _lbpv_prefix(index: int, params: LbpParams) -> str:
    if index == 0:
        return 'lbpv'
    return f'lbpv.p{params.P}r{params.R:g}'


def texture_features(scan: SegmentedScan,
                     levels: int = 8,
                     offsets: Sequence[Tuple[int, int]] = DEFAULT_OFFSETS,
                     lbp_pairs: Sequence[Tuple[int, float]] = ((8, 1),),
                     use_glcm: bool = True,
                     use_lbpv: bool = True) -> Dict[str, float]:
    """
    Compute the GLCM and LBPV blocks over the retina region of a scan.

    The first (P, R) pair is named lbpv.b<k>; further pairs carry a
    lbpv.p<P>r<R>. prefix.
    """
    features: Dict[str, float] = {}
    image, region = scan.image, scan.retina_mask
    if use_glcm:
        grid = quantize(image, region, levels)
        for k, offset in enumerate(offsets, start=1):
            stats = glcm_features(glcm(grid, offset, levels))
            for name in GLCM_STATS:
                features[f'glcm.{name}.o{k}'] = stats[name]
    if use_lbpv:
        for index, (p, r) in enumerate(lbp_pairs):
            params = LbpParams(P=int(p), R=r)
            histogram = lbpv_histogram(lbp_riu2(image, region, params),
                                       local_variance(image, region, params), params)
            if histogram.degenerate:
                logger.warning(f"LBPV histogram (P={params.P}, R={params.R:g}) has zero total variance")
            prefix = _lbpv_prefix(index, params)
            for k, weight in enumerate(histogram.bins):
                features[f'{prefix}.b{k}'] = float(weight)
    return features
