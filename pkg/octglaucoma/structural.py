"""
RNFL Thickness Descriptor Module

This module turns the RNFL segmentation of a B-scan into structural features.

Features:
- Per-column thickness profile from the upper/lower RNFL boundaries
- Thickness histogram over a vector of relevant distances (default
  [0, 15, 30, 45, 100]): half-open bins [D_p, D_p+1) with a closed last bin;
  values above the last edge are counted in the last bin and reported
- Thickness extrema (min, max)

Feature names: thick.h1..thick.h4, thick.min, thick.max
"""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .errors import EmptyInputError
from .models import SegmentedScan

logger = logging.getLogger(__name__)

DEFAULT_EDGES = (0.0, 15.0, 30.0, 45.0, 100.0)


@dataclass(frozen=True)
class ThicknessProfile:
    """
    RNFL thickness t_1..t_N, one value per image column.

    Attributes:
        values (np.ndarray): Non-negative thickness values
        unit_note (str): Human-readable unit of the values
    """
    values: np.ndarray
    unit_note: str = 'pixels'

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError('thickness profile must be 1-D')
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError('thickness values must be finite and non-negative')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ThicknessEdges:
    """Strictly increasing histogram edges (at least 2)."""
    edges: tuple = DEFAULT_EDGES

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError('edges must be strictly increasing with at least 2 values')
        object.__setattr__(self, 'edges', edges)

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1


@dataclass(frozen=True)
class ThicknessHistogram:
    """
    Histogram counts plus diagnostics.

    Attributes:
        counts (np.ndarray): h_1..h_n, clipped values included in the last bin
        clipped (int): Values above the last edge, counted in the last bin
        below (int): Values below the first edge, counted nowhere
    """
    counts: np.ndarray
    clipped: int
    below: int


def compute_thickness_profile(scan: SegmentedScan) -> ThicknessProfile:
    """
    Compute the RNFL thickness of every column.

    t_j = (rnfl_lower[j] - rnfl_upper[j]) * axial_scale

    Args:
        scan (SegmentedScan): Scan with valid boundaries

    Returns:
        ThicknessProfile: One value per image column

    Example:
        >>> # upper = 10, lower = 30, axial_scale = 3.9 everywhere
        >>> compute_thickness_profile(scan).values[0]
        78.0
    """
    pixels = (scan.rnfl_lower - scan.rnfl_upper).astype(np.float64)
    unit = 'pixels' if scan.axial_scale == 1.0 else f'pixels x {scan.axial_scale:g}'
    return ThicknessProfile(values=pixels * scan.axial_scale, unit_note=unit)


def thickness_histogram(profile: ThicknessProfile,
                        edges: ThicknessEdges = ThicknessEdges()) -> ThicknessHistogram:
    """
    Count thickness values falling between consecutive relevant distances.

    Args:
        profile (ThicknessProfile): Non-empty profile
        edges (ThicknessEdges): Bin edges D

    Returns:
        ThicknessHistogram: Counts with clip/below diagnostics

    Raises:
        EmptyInputError: If the profile is empty

    Example:
        >>> thickness_histogram(ThicknessProfile(np.array([10, 20, 40, 50]))).counts
        array([1, 1, 1, 1])
    """
    if len(profile) == 0:
        raise EmptyInputError('thickness profile is empty')
    values = profile.values
    counts, _ = np.histogram(values, bins=np.asarray(edges.edges))
    counts = counts.astype(np.int64)
    clipped = int(np.count_nonzero(values > edges.edges[-1]))
    below = int(np.count_nonzero(values < edges.edges[0]))
    if clipped:
        counts[-1] += clipped
        logger.warning(f"{clipped} thickness value(s) above {edges.edges[-1]:g} counted in the last bin")
    return ThicknessHistogram(counts=counts, clipped=clipped, below=below)


def thickness_extrema(profile: ThicknessProfile):
    """
    Return (minT, maxT) of a non-empty profile.

    Raises:
        EmptyInputError: If the profile is empty
    """
    if len(profile) == 0:
        raise EmptyInputError('thickness profile is empty')
    return float(profile.values.min()), float(profile.values.max())


def structural_features(scan: SegmentedScan,
                        edges: Sequence[float] = DEFAULT_EDGES,
                        proportions: bool = False) -> Dict[str, float]:
    """
    Compute the named thickness features of one scan.

    Args:
        scan: Segmented scan
        edges: Histogram edges
        proportions: Divide the counts by the number of columns

    Returns:
        Dict[str, float]: thick.h1..thick.hn, thick.min, thick.max
    """
    profile = compute_thickness_profile(scan)
    histogram = thickness_histogram(profile, ThicknessEdges(tuple(edges)))
    counts = histogram.counts.astype(np.float64)
    if proportions:
        counts = counts / len(profile)
    features = {f'thick.h{p + 1}': float(c) for p, c in enumerate(counts)}
    min_t, max_t = thickness_extrema(profile)
    features['thick.min'] = min_t
    features['thick.max'] = max_t
    return features
