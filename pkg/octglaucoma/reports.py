"""
Result Report Generation Module

This module renders pipeline results as CSV text files.

Features:
- Provenance header line (package version, config hash, seed, command) on
  every file; no timestamps, so equal runs give byte-identical files
- Metrics table: one row per metric (SN, SPC, FS, ACC, AUC) with the CV
  mean and standard deviation and the test value
- Per-fold CV table, ROC point table and selection decision table
- Boxplot-ready per-class five-number summaries and the correlation matrix
  of the thickness block

Each builder returns a dict with ``file_data`` (bytes), ``filename`` and
``content_type``; write_report stores it in a directory.
"""

import csv
from io import StringIO
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from . import __version__
from .config import ExperimentConfig
from .metrics import METRIC_NAMES, EvalReport
from .models import LABEL_NAMES, FeatureMatrix
from .selection import SelectionReport

MISSING = 'NA'


def provenance_line(command: str, config: ExperimentConfig, seed: Optional[int] = None) -> str:
    """
    Build the ``#`` header line written at the top of every output.

    Example:
        >>> provenance_line('run', ExperimentConfig())
        '# octglaucoma 0.1.0 config=... seed=0 command=run\\n'
    """
    seed = config.split_seed if seed is None else seed
    return f"# octglaucoma {__version__} config={config.config_hash()} seed={seed} command={command}\n"


def _cell(value: Any) -> str:
    if value is None:
        return MISSING
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _render(filename: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
            provenance: Optional[str] = None) -> Dict[str, Any]:
    output = StringIO()
    if provenance:
        output.write(provenance)
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return {
        'file_data': output.getvalue().encode('utf-8'),
        'filename': filename,
        'content_type': 'text/csv',
    }


def write_report(report: Dict[str, Any], out_dir: Union[str, Path]) -> Path:
    """Write a built report into a directory and return its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / report['filename']
    path.write_bytes(report['file_data'])
    return path


def metrics_table_csv(test_report: Optional[EvalReport], cv_mean: Optional[Dict[str, Optional[float]]] = None,
                      cv_std: Optional[Dict[str, Optional[float]]] = None, provenance: Optional[str] = None,
                      filename: str = 'metrics.csv') -> Dict[str, Any]:
    """
    Render the metrics table (rows SN, SPC, FS, ACC, AUC).

    Args:
        test_report: Held-out evaluation, or None
        cv_mean: Mean over folds per metric, or None
        cv_std: Sample standard deviation over folds per metric, or None
        provenance: Header line
        filename: Suggested filename
    """
    test = test_report.metrics() if test_report is not None else {}
    cv_mean = cv_mean or {}
    cv_std = cv_std or {}
    rows = [[name, cv_mean.get(name), cv_std.get(name), test.get(name)] for name in METRIC_NAMES]
    return _render(filename, ['metric', 'cv_mean', 'cv_std', 'test'], rows, provenance)


def confusion_csv(report: EvalReport, provenance: Optional[str] = None,
                  filename: str = 'confusion.csv') -> Dict[str, Any]:
    rows = [['threshold', report.threshold], ['tp', report.tp], ['fp', report.fp],
            ['tn', report.tn], ['fn', report.fn]]
    return _render(filename, ['quantity', 'value'], rows, provenance)


def folds_table_csv(fold_results, provenance: Optional[str] = None,
                    filename: str = 'cv_folds.csv') -> Dict[str, Any]:
    """One row per fold: sizes, number of selected features and the five metrics."""
    rows = []
    for result in fold_results:
        metrics = result.report.metrics()
        rows.append([result.fold, result.n_train_scans, result.n_eval_scans, len(result.selected),
                     result.best_epoch, *(metrics[name] for name in METRIC_NAMES)])
    header = ['fold', 'n_train', 'n_eval', 'n_selected', 'best_epoch', *METRIC_NAMES]
    return _render(filename, header, rows, provenance)


def roc_points_csv(report: EvalReport, provenance: Optional[str] = None,
                   filename: str = 'roc.csv') -> Dict[str, Any]:
    return _render(filename, ['fpr', 'tpr'], report.roc_points, provenance)


def selection_table_csv(report: SelectionReport, provenance: Optional[str] = None,
                        filename: str = 'selection.csv') -> Dict[str, Any]:
    """Render every selection decision (feature, family, test, p_value, decision, partner, r)."""
    frame = report.to_frame()
    rows = frame.itertuples(index=False, name=None)
    return _render(filename, list(frame.columns),
                   ([None if isinstance(v, float) and np.isnan(v) else v for v in row] for row in rows),
                   provenance)


def describe_features(matrix: FeatureMatrix, labels) -> pd.DataFrame:
    """
    Per-feature, per-class boxplot statistics.

    Returns:
        pd.DataFrame: Columns feature, class, n, min, q1, median, q3, max, mean, std
    """
    labels = np.asarray(labels, dtype=np.int64)
    records: List[Dict[str, Any]] = []
    for index, name in enumerate(matrix.feature_names):
        for cls, class_name in LABEL_NAMES.items():
            values = matrix.values[labels == cls, index]
            if values.size == 0:
                continue
            q1, median, q3 = np.percentile(values, [25, 50, 75])
            records.append({
                'feature': name, 'class': class_name, 'n': int(values.size),
                'min': float(values.min()), 'q1': float(q1), 'median': float(median),
                'q3': float(q3), 'max': float(values.max()),
                'mean': float(values.mean()),
                'std': float(values.std(ddof=1)) if values.size > 1 else 0.0,
            })
    return pd.DataFrame(records, columns=['feature', 'class', 'n', 'min', 'q1', 'median',
                                          'q3', 'max', 'mean', 'std'])


def description_csv(matrix: FeatureMatrix, labels, provenance: Optional[str] = None,
                    filename: str = 'description.csv') -> Dict[str, Any]:
    frame = describe_features(matrix, labels)
    return _render(filename, list(frame.columns), frame.itertuples(index=False, name=None), provenance)


def thickness_correlation(matrix: FeatureMatrix, prefix: str = 'thick.') -> pd.DataFrame:
    """Pearson correlation matrix of the columns starting with ``prefix``."""
    names = [n for n in matrix.feature_names if n.startswith(prefix)]
    frame = pd.DataFrame(matrix.select_features(names).values, columns=names)
    return frame.corr(method='pearson')


def correlation_csv(matrix: FeatureMatrix, provenance: Optional[str] = None, prefix: str = 'thick.',
                    filename: str = 'thickness_correlation.csv') -> Dict[str, Any]:
    corr = thickness_correlation(matrix, prefix)
    rows = ([name, *(None if np.isnan(v) else v for v in corr.loc[name])] for name in corr.index)
    return _render(filename, ['feature', *corr.columns], rows, provenance)


def split_table_csv(split, folds, patient_labels: Dict[str, int], provenance: Optional[str] = None,
                    filename: str = 'split.csv') -> Dict[str, Any]:
    """One row per patient: label and role (``test`` or ``fold<i>``)."""
    rows = []
    for patient in sorted(patient_labels):
        if patient in split.test_patients:
            role = 'test'
        else:
            role = f"fold{folds.assignment[patient]}"
        rows.append([patient, LABEL_NAMES[patient_labels[patient]], role])
    return _render(filename, ['patient_id', 'label', 'role'], rows, provenance)


def loss_trace_csv(trace, provenance: Optional[str] = None,
                   filename: str = 'loss_trace.csv') -> Dict[str, Any]:
    """Training and validation loss per epoch; epoch 0 is the initial model."""
    rows = []
    for epoch, train_loss in enumerate(trace.train):
        validation = trace.validation[epoch] if epoch < len(trace.validation) else None
        rows.append([epoch, train_loss, validation])
    return _render(filename, ['epoch', 'train_loss', 'validation_loss'], rows, provenance)
