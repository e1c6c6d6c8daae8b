"""
Evaluation Metrics Module

This module scores binary predictions.

Features:
- Confusion counts at a decision threshold (score >= threshold is positive)
- Sensitivity (SN), specificity (SPC), F-score (FS) and accuracy (ACC);
  a ratio with a zero denominator is reported as 0
- Tie-aware ROC points and the trapezoidal AUC, equal to the fraction of
  correctly ordered positive/negative pairs with ties counted as one half
- Single-class labels leave the AUC undefined; in strict mode this raises
  AucUndefinedError carrying the partially filled report
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from sklearn.metrics import auc as trapezoid_auc
from sklearn.metrics import confusion_matrix, roc_curve

from .classifier import predict_proba
from .errors import AucUndefinedError, DimensionMismatchError, EmptyInputError

logger = logging.getLogger(__name__)

METRIC_NAMES = ('SN', 'SPC', 'FS', 'ACC', 'AUC')


@dataclass(frozen=True)
class EvalReport:
    """
    Metrics of one evaluation.

    Attributes:
        tp, fp, tn, fn (int): Confusion counts at the threshold
        sn, spc, fs, acc (float): Sensitivity, specificity, F-score, accuracy
        auc (Optional[float]): Area under the ROC curve, None for single-class labels
        roc_points (Tuple[Tuple[float, float], ...]): (FPR, TPR) from (0, 0) to (1, 1)
        threshold (float): Decision threshold used for the confusion counts
    """
    tp: int
    fp: int
    tn: int
    fn: int
    sn: float
    spc: float
    fs: float
    acc: float
    auc: Optional[float]
    roc_points: Tuple[Tuple[float, float], ...] = field(default=())
    threshold: float = 0.5

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def metrics(self) -> Dict[str, Optional[float]]:
        """The five headline metrics keyed by their short names."""
        return {'SN': self.sn, 'SPC': self.spc, 'FS': self.fs, 'ACC': self.acc, 'AUC': self.auc}


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den else 0.0


def evaluate_scores(scores, labels, threshold: float = 0.5, strict: bool = True) -> EvalReport:
    """
    Compute all metrics for scores against 0/1 labels.

    Args:
        scores: Positive-class scores, one per instance
        labels: 0/1 labels
        threshold: Decision threshold
        strict: Raise AucUndefinedError when the labels hold one class only

    Returns:
        EvalReport: Metrics and ROC points

    Raises:
        EmptyInputError: If there are no scores
        AucUndefinedError: In strict mode, for single-class labels

    Example:
        >>> r = evaluate_scores([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
        >>> r.auc, r.acc
        (1.0, 1.0)
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if scores.size == 0:
        raise EmptyInputError('no scores to evaluate')
    if scores.shape != labels.shape:
        raise DimensionMismatchError(f"{scores.size} scores for {labels.size} labels")

    predicted = (scores >= threshold).astype(np.int64)
    tn, fp, fn, tp = (int(v) for v in confusion_matrix(labels, predicted, labels=[0, 1]).ravel())
    sn = _ratio(tp, tp + fn)
    spc = _ratio(tn, tn + fp)
    precision = _ratio(tp, tp + fp)
    fs = _ratio(2 * precision * sn, precision + sn)
    acc = _ratio(tp + tn, labels.size)

    auc_value = None
    points: Tuple[Tuple[float, float], ...] = ()
    if np.unique(labels).size == 2:
        fpr, tpr, _ = roc_curve(labels, scores, drop_intermediate=False)
        auc_value = float(trapezoid_auc(fpr, tpr))
        points = tuple((float(a), float(b)) for a, b in zip(fpr, tpr))

    report = EvalReport(tp=tp, fp=fp, tn=tn, fn=fn, sn=sn, spc=spc, fs=fs, acc=acc,
                        auc=auc_value, roc_points=points, threshold=threshold)
    if auc_value is None:
        message = f"AUC undefined: all {labels.size} labels belong to one class"
        if strict:
            raise AucUndefinedError(message, report)
        logger.warning(message)
    return report


def evaluate(model, matrix, labels, threshold: float = 0.5, strict: bool = True) -> EvalReport:
    """Score a trained model on a feature matrix (see evaluate_scores)."""
    return evaluate_scores(predict_proba(model, matrix), labels, threshold, strict)
