"""
Feature Selection Module

This module discards non-relevant and redundant features with statistical
tests at a significance level alpha.

Features:
- Relevance: per feature, a Kolmogorov-Smirnov normality test within each
  class chooses between a Welch t-test (normal in both classes) and a
  Mann-Whitney U test; the feature is kept when the p-value is below alpha
- Redundancy: kept features are visited in ascending p-value order (ties by
  name); of two features with |r| >= redundancy_r and a significant
  correlation, the later (less discriminative) one is dropped
- A SelectionReport recording every decision, exportable as a DataFrame
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import DimensionMismatchError, InsufficientClassError, NumericDegeneracyError
from .models import FeatureMatrix, feature_family
from .stats_tests import ks_normality, mann_whitney_u, pearson, t_test

logger = logging.getLogger(__name__)

TEST_T = 't'
TEST_MWU = 'mann-whitney'


@dataclass
class FeatureDecision:
    """
    Selection outcome of one feature.

    Attributes:
        feature (str): Feature name
        normal_in_both_classes (bool): KS normality held within both classes
        test_used (str): 't' or 'mann-whitney'
        p_value (float): Discriminability p-value
        selected (bool): Final decision
        dropped_for_redundancy_with (Optional[str]): Kept partner when dropped as redundant
        redundancy_r (Optional[float]): Correlation with that partner
    """
    feature: str
    normal_in_both_classes: bool
    test_used: str
    p_value: float
    selected: bool = False
    dropped_for_redundancy_with: Optional[str] = None
    redundancy_r: Optional[float] = None

    @property
    def family(self) -> str:
        return feature_family(self.feature)

    @property
    def decision(self) -> str:
        if self.selected:
            return 'selected'
        if self.dropped_for_redundancy_with is not None:
            return 'redundant'
        return 'not-relevant'


@dataclass
class SelectionReport:
    """Per-feature decisions of one selection run, in input column order."""
    alpha: float
    redundancy_threshold: float
    decisions: List[FeatureDecision] = field(default_factory=list)

    @property
    def selected_names(self) -> List[str]:
        return [d.feature for d in self.decisions if d.selected]

    def decision(self, feature: str) -> FeatureDecision:
        for d in self.decisions:
            if d.feature == feature:
                return d
        raise KeyError(feature)

    def family_summary(self) -> Dict[str, Tuple[int, int]]:
        """Map each family to (kept, total), in first-appearance order."""
        summary: Dict[str, List[int]] = {}
        for d in self.decisions:
            counts = summary.setdefault(d.family, [0, 0])
            counts[0] += int(d.selected)
            counts[1] += 1
        return {family: (kept, total) for family, (kept, total) in summary.items()}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                'feature': d.feature,
                'family': d.family,
                'test': d.test_used,
                'p_value': d.p_value,
                'decision': d.decision,
                'partner': d.dropped_for_redundancy_with or '',
                'r': d.redundancy_r,
            }
            for d in self.decisions
        ], columns=['feature', 'family', 'test', 'p_value', 'decision', 'partner', 'r'])


def _is_normal(values: np.ndarray, alpha: float, feature: str) -> bool:
    try:
        return ks_normality(values).p_value >= alpha
    except NumericDegeneracyError as e:
        logger.debug(f"{feature}: normality test not applicable ({e}); using Mann-Whitney")
        return False


def relevance_test(values: np.ndarray, labels: np.ndarray, alpha: float,
                   feature: str = '') -> FeatureDecision:
    """Run the normality-routed discriminability test of one feature."""
    a = values[labels == 0]
    b = values[labels == 1]
    normal = _is_normal(a, alpha, feature) and _is_normal(b, alpha, feature)
    if normal:
        result = t_test(a, b)
        test = TEST_T
    else:
        result = mann_whitney_u(a, b)
        test = TEST_MWU
    return FeatureDecision(feature=feature, normal_in_both_classes=normal,
                           test_used=test, p_value=result.p_value)


def select_features(matrix: FeatureMatrix, labels, alpha: float = 0.05,
                    redundancy_r: float = 0.95) -> Tuple[FeatureMatrix, SelectionReport]:
    """
    Select relevant, non-redundant features.

    Args:
        matrix: Feature matrix (training data only)
        labels: 0/1 label per matrix row
        alpha: Significance level of every test
        redundancy_r: |r| threshold of the redundancy stage

    Returns:
        Tuple[FeatureMatrix, SelectionReport]: Matrix restricted to the selected
            columns (original column order) and the decision report

    Raises:
        InsufficientClassError: If a class has fewer than 2 instances
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (matrix.n_instances,):
        raise DimensionMismatchError(f"got {labels.size} labels for {matrix.n_instances} instances")
    for cls in (0, 1):
        count = int(np.count_nonzero(labels == cls))
        if count < 2:
            raise InsufficientClassError(f"class {cls} has {count} instance(s); selection needs at least 2")

    decisions = []
    for index, name in enumerate(matrix.feature_names):
        decision = relevance_test(matrix.values[:, index], labels, alpha, name)
        decision.selected = decision.p_value < alpha
        logger.debug(f"{name}: {decision.test_used} p={decision.p_value:.4g}")
        decisions.append(decision)

    by_name = {d.feature: d for d in decisions}
    ranked = sorted((d for d in decisions if d.selected), key=lambda d: (d.p_value, d.feature))
    for i, keeper in enumerate(ranked):
        if not keeper.selected:
            continue
        x = matrix.column(keeper.feature)
        for other in ranked[i + 1:]:
            if not other.selected:
                continue
            try:
                r, p = pearson(x, matrix.column(other.feature))
            except NumericDegeneracyError:
                continue
            if abs(r) >= redundancy_r and p < alpha:
                other.selected = False
                other.dropped_for_redundancy_with = keeper.feature
                other.redundancy_r = r
                logger.debug(f"{other.feature}: redundant with {keeper.feature} (r={r:.4f})")

    report = SelectionReport(alpha=alpha, redundancy_threshold=redundancy_r,
                             decisions=[by_name[n] for n in matrix.feature_names])
    kept = report.selected_names
    logger.info(f"Selected {len(kept)} of {matrix.n_features} features "
                f"({', '.join(f'{f} {k}/{t}' for f, (k, t) in report.family_summary().items())})")
    return matrix.select_features(kept), report
