"""
Directional Hurst Exponent Module

This module measures the self-similarity of the retina region along a set of
directions (default 0, 30, 45, 60 and 90 degrees).

Features:
- Deterministic families of parallel lines at a given angle, sampled at unit
  steps along the dominant axis with bilinear interpolation
- Only in-region runs of a minimum length (default 32) are kept
- Rescaled-range (R/S) estimate of the Hurst exponent pooled over all runs of
  one direction, with a geometric window ladder 8, 16, 32, ...

Angles are measured from the row axis (left to right) toward increasing row
index: 0 gives image rows, 90 gives columns read top to bottom and 45 gives
lattice diagonals.

Feature names: hurst.a0, hurst.a30, hurst.a45, hurst.a60, hurst.a90
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateSignalError, EmptyRegionError, InsufficientDataError
from .imaging import bilinear, snap, support_inside
from .models import GrayImage, SegmentedScan

logger = logging.getLogger(__name__)

DEFAULT_ANGLES = (0.0, 30.0, 45.0, 60.0, 90.0)
MIN_RUN = 32
MIN_WINDOW = 8


@dataclass(frozen=True)
class HurstEstimate:
    """
    Result of a rescaled-range fit.

    Attributes:
        h (float): Least-squares slope of log(R/S) against log(n), never clamped
        out_of_range (bool): True when h lies outside [0, 1]
        skipped_windows (int): Windows with zero spread left out of the average
        window_sizes (Tuple[int, ...]): Ladder sizes that contributed a point
        rs_means (Tuple[float, ...]): Mean R/S for each of those sizes
    """
    h: float
    out_of_range: bool
    skipped_windows: int
    window_sizes: Tuple[int, ...] = field(default=())
    rs_means: Tuple[float, ...] = field(default=())


def _runs(valid: np.ndarray, min_run: int) -> List[Tuple[int, int]]:
    """Maximal [start, stop) runs of True of length >= min_run."""
    padded = np.concatenate(([0], valid.astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    starts, stops = edges[0::2], edges[1::2]
    return [(int(a), int(b)) for a, b in zip(starts, stops) if b - a >= min_run]


def _line_grid(shape: Tuple[int, int], angle_deg: float):
    """
    Sampling positions of every line crossing the grid at the given angle.

    Returns (rows, cols), each of shape (lines, steps).
    """
    height, width = shape
    theta = math.radians(angle_deg)
    cos_t, sin_t = snap(math.cos(theta)), snap(math.sin(theta))
    if abs(cos_t) >= abs(sin_t):
        # one unit step per column
        slope = snap(sin_t / cos_t)
        steps = np.arange(width, dtype=np.float64)
        reach = slope * (width - 1)
        intercepts = np.arange(math.floor(min(0.0, -reach)), math.ceil(max(height - 1, height - 1 - reach)) + 1)
        rows = np.round(intercepts[:, None] + slope * steps[None, :], 12)
        cols = np.broadcast_to(steps, rows.shape)
    else:
        # one unit step per row
        slope = snap(cos_t / sin_t)
        steps = np.arange(height, dtype=np.float64)
        reach = slope * (height - 1)
        intercepts = np.arange(math.floor(min(0.0, -reach)), math.ceil(max(width - 1, width - 1 - reach)) + 1)
        cols = np.round(intercepts[:, None] + slope * steps[None, :], 12)
        rows = np.broadcast_to(steps, cols.shape)
    return np.asarray(rows, dtype=np.float64), np.asarray(cols, dtype=np.float64)


def directional_profiles(image, region: np.ndarray, angle_deg: float,
                         min_run: int = MIN_RUN) -> List[np.ndarray]:
    """
    Sample the region along parallel lines at one angle.

    Lines are one pixel apart along the minor axis. A sample is valid when
    every pixel with nonzero interpolation weight lies inside the region;
    maximal runs of valid samples of length >= min_run are returned, in line
    order.

    Args:
        image: GrayImage or 2-D array
        region: Boolean mask matching the image
        angle_deg: Direction in degrees, within [0, 180)
        min_run: Shortest run kept

    Returns:
        List[np.ndarray]: Intensity sequences

    Raises:
        EmptyRegionError: If the region is empty
        InsufficientDataError: If no run reaches min_run samples

    Example:
        >>> # full-rectangle region, angle 0
        >>> profiles = directional_profiles(img, np.ones(img.shape, bool), 0)
        >>> len(profiles) == img.shape[0]
        True
    """
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    region = np.asarray(region, dtype=bool)
    if not region.any():
        raise EmptyRegionError('region is empty')
    height, width = pixels.shape
    rows, cols = _line_grid(pixels.shape, angle_deg)
    inside = (rows >= 0) & (rows <= height - 1) & (cols >= 0) & (cols <= width - 1)
    safe_rows = np.clip(rows, 0, height - 1)
    safe_cols = np.clip(cols, 0, width - 1)
    valid = inside & support_inside(region, safe_rows, safe_cols)

    sequences = []
    for line in range(rows.shape[0]):
        for start, stop in _runs(valid[line], min_run):
            sequences.append(bilinear(pixels, rows[line, start:stop], cols[line, start:stop]))
    if not sequences:
        raise InsufficientDataError(f"no in-region run of length >= {min_run} at angle {angle_deg:g}")
    return sequences


def window_ladder(max_length: int, min_window: int = MIN_WINDOW) -> List[int]:
    """Geometric ladder min_window, 2*min_window, ... up to max_length."""
    sizes = []
    n = min_window
    while n <= max_length:
        sizes.append(n)
        n *= 2
    return sizes


def hurst_exponent(sequences: Sequence[np.ndarray], min_window: int = MIN_WINDOW) -> HurstEstimate:
    """
    Estimate the Hurst exponent of a family of sequences by rescaled range.

    For each ladder size n every sequence is cut into disjoint windows of n
    samples (trailing remainder dropped). Per window, R is the range of the
    cumulative mean-adjusted sums and S the population standard deviation;
    R/S is averaged over all windows of all sequences. H is the slope of
    log(R/S) against log(n).

    Args:
        sequences: 1-D sequences of one direction
        min_window: Smallest window size

    Returns:
        HurstEstimate: Slope and diagnostics

    Raises:
        InsufficientDataError: If fewer than two ladder sizes produce a point
        DegenerateSignalError: If every window has zero spread
    """
    sequences = [np.asarray(s, dtype=np.float64) for s in sequences if len(s) >= min_window]
    if not sequences:
        raise InsufficientDataError(f"no sequence with at least {min_window} samples")
    ladder = window_ladder(max(s.size for s in sequences), min_window)
    if len(ladder) < 2:
        raise InsufficientDataError('sequences too short for two window sizes')

    sizes, means = [], []
    skipped = 0
    usable = 0
    for n in ladder:
        blocks = [s[:(s.size // n) * n].reshape(-1, n) for s in sequences if s.size >= n]
        windows = np.vstack(blocks)
        flat = np.ptp(windows, axis=1) == 0
        skipped += int(flat.sum())
        windows = windows[~flat]
        if windows.shape[0] == 0:
            continue
        usable += windows.shape[0]
        deviations = windows - windows.mean(axis=1, keepdims=True)
        walk = np.cumsum(deviations, axis=1)
        rs = (walk.max(axis=1) - walk.min(axis=1)) / windows.std(axis=1)
        sizes.append(n)
        means.append(float(rs.mean()))

    if usable == 0:
        raise DegenerateSignalError('every rescaled-range window has zero spread')
    if len(sizes) < 2:
        raise InsufficientDataError('fewer than two usable window sizes')
    if skipped:
        logger.warning(f"Skipped {skipped} zero-spread R/S window(s)")

    slope = float(np.polyfit(np.log(sizes), np.log(means), 1)[0])
    return HurstEstimate(
        h=slope,
        out_of_range=not 0.0 <= slope <= 1.0,
        skipped_windows=skipped,
        window_sizes=tuple(sizes),
        rs_means=tuple(means),
    )


def hurst_features(scan: SegmentedScan,
                   angles: Sequence[float] = DEFAULT_ANGLES,
                   min_run: int = MIN_RUN,
                   min_window: int = MIN_WINDOW) -> Dict[str, float]:
    """
    Compute one Hurst exponent per direction over the retina region.

    Returns:
        Dict[str, float]: hurst.a<angle> for every angle, in the given order
    """
    features: Dict[str, float] = {}
    for angle in angles:
        estimate = hurst_exponent(
            directional_profiles(scan.image, scan.retina_mask, angle, min_run), min_window
        )
        if estimate.out_of_range:
            logger.warning(f"Hurst slope {estimate.h:.4f} at angle {angle:g} lies outside [0, 1]")
        features[f'hurst.a{angle:g}'] = estimate.h
    return features
