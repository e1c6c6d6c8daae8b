import re

import numpy as np
import pytest

from octglaucoma.classifier import LossTrace
from octglaucoma.config import ExperimentConfig
from octglaucoma.metrics import evaluate_scores
from octglaucoma.models import FeatureMatrix
from octglaucoma.partition import FoldPlan, SplitPlan
from octglaucoma.reports import (
    confusion_csv,
    correlation_csv,
    describe_features,
    loss_trace_csv,
    metrics_table_csv,
    provenance_line,
    roc_points_csv,
    selection_table_csv,
    split_table_csv,
    thickness_correlation,
    write_report,
)
from octglaucoma.selection import select_features


def _lines(report):
    return report['file_data'].decode('utf-8').splitlines()


def test_provenance_line():
    line = provenance_line('run --mode hdl', ExperimentConfig())
    assert re.fullmatch(r'# octglaucoma \S+ config=[0-9a-f]{16} seed=0 command=run --mode hdl\n', line)
    assert 'seed=7' in provenance_line('train', ExperimentConfig(), seed=7)


def test_metrics_table():
    report = evaluate_scores([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0])
    built = metrics_table_csv(report, {'SN': 0.5, 'AUC': 0.75}, {'SN': 0.1, 'AUC': 0.05},
                              provenance='# header\n')
    lines = _lines(built)
    assert built['filename'] == 'metrics.csv'
    assert built['content_type'] == 'text/csv'
    assert lines[0] == '# header'
    assert lines[1] == 'metric,cv_mean,cv_std,test'
    assert [line.split(',')[0] for line in lines[2:]] == ['SN', 'SPC', 'FS', 'ACC', 'AUC']
    assert lines[2] == 'SN,0.5,0.1,0.5'
    assert lines[3] == 'SPC,NA,NA,0.5'
    assert lines[6] == 'AUC,0.75,0.05,0.75'


def test_metrics_table_without_auc():
    report = evaluate_scores([0.9, 0.2], [1, 1], strict=False)
    lines = _lines(metrics_table_csv(report))
    assert lines[-1] == 'AUC,NA,NA,NA'


def test_confusion_and_roc_tables():
    report = evaluate_scores([0.9, 0.6, 0.4, 0.1], [1, 0, 1, 0])
    assert _lines(confusion_csv(report)) == ['quantity,value', 'threshold,0.5', 'tp,1', 'fp,1', 'tn,1', 'fn,1']
    roc = _lines(roc_points_csv(report))
    assert roc[0] == 'fpr,tpr'
    assert roc[1] == '0.0,0.0' and roc[-1] == '1.0,1.0'


def test_selection_table():
    rng = np.random.default_rng(0)
    signal = np.concatenate([rng.normal(0, 1, 20), rng.normal(3, 1, 20)])
    matrix = FeatureMatrix([f's{i}' for i in range(40)], ['thick.h1', 'thick.h2', 'glcm.mean.o1'],
                           np.column_stack([signal, signal, np.tile(rng.normal(size=20), 2)]))
    _, report = select_features(matrix, np.repeat([0, 1], 20))
    lines = _lines(selection_table_csv(report))
    assert lines[0] == 'feature,family,test,p_value,decision,partner,r'
    assert lines[1].startswith('thick.h1,thick,')
    assert lines[1].endswith(',selected,,NA')
    assert ',redundant,thick.h1,' in lines[2]
    assert lines[3].endswith(',not-relevant,,NA')


def test_split_table():
    split = SplitPlan(train_patients=('A', 'B', 'C'), test_patients=('D',), seed=0, ratio=0.8)
    folds = FoldPlan(k=2, seed=1, assignment={'A': 0, 'B': 1, 'C': 0})
    lines = _lines(split_table_csv(split, folds, {'A': 0, 'B': 1, 'C': 1, 'D': 0}))
    assert lines == ['patient_id,label,role', 'A,normal,fold0', 'B,glaucoma,fold1',
                     'C,glaucoma,fold0', 'D,normal,test']


def test_loss_trace_table():
    trace = LossTrace(train=[0.7, 0.5, 0.25], validation=[0.75, 0.5, 0.5], best_epoch=1)
    assert _lines(loss_trace_csv(trace)) == ['epoch,train_loss,validation_loss', '0,0.7,0.75',
                                             '1,0.5,0.5', '2,0.25,0.5']
    no_validation = LossTrace(train=[0.7, 0.6])
    assert _lines(loss_trace_csv(no_validation))[-1] == '1,0.6,NA'


def test_describe_features():
    matrix = FeatureMatrix([f's{i}' for i in range(6)], ['thick.h1'],
                           np.array([[1.0], [2.0], [3.0], [10.0], [20.0], [30.0]]))
    frame = describe_features(matrix, [0, 0, 0, 1, 1, 1])
    assert frame['class'].tolist() == ['normal', 'glaucoma']
    normal = frame.iloc[0]
    assert (normal['min'], normal['median'], normal['max']) == (1.0, 2.0, 3.0)
    assert normal['q1'] == pytest.approx(1.5)
    assert normal['std'] == pytest.approx(1.0)


def test_thickness_correlation(tmp_path):
    values = np.array([[1.0, 2.0, 5.0, 7.0], [2.0, 4.0, 3.0, 1.0], [3.0, 6.0, 1.0, 4.0]])
    matrix = FeatureMatrix(['a', 'b', 'c'], ['thick.h1', 'thick.h2', 'thick.min', 'glcm.mean.o1'], values)
    corr = thickness_correlation(matrix)
    assert list(corr.columns) == ['thick.h1', 'thick.h2', 'thick.min']
    assert corr.loc['thick.h1', 'thick.h2'] == pytest.approx(1.0)
    assert corr.loc['thick.h1', 'thick.min'] == pytest.approx(-1.0)
    path = write_report(correlation_csv(matrix, provenance='# p\n'), tmp_path / 'out')
    assert path.name == 'thickness_correlation.csv'
    assert path.read_text().splitlines()[1] == 'feature,thick.h1,thick.h2,thick.min'
