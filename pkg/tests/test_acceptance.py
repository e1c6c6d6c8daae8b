"""
End-to-end checks on the default-size synthetic cohort (100 patients, 200
scans). Extraction runs once per session; the runs themselves are cheap.
"""

import numpy as np
import pytest

from octglaucoma.config import ExperimentConfig
from octglaucoma.embeddings import EmbeddingTable, append_label_signal, standin_embedder
from octglaucoma.pipeline import run_experiment

pytestmark = pytest.mark.slow

CONFIG = ExperimentConfig(learning_rate=0.05)


@pytest.fixture(scope='module')
def hdl_result(default_dataset, default_features):
    return run_experiment(default_dataset, 'hdl', CONFIG, features=default_features)


def test_hand_crafted_descriptors_detect_glaucoma(hdl_result):
    assert hdl_result.test_report.auc >= 0.95
    assert hdl_result.test_report.acc >= 0.85
    assert hdl_result.cv.mean['AUC'] >= 0.9
    assert hdl_result.test_report.n == 40


def test_thickness_descriptors_survive_selection(hdl_result):
    kept = hdl_result.selection.selected_names
    assert any(name.startswith('thick.') for name in kept)


def test_shuffled_labels_give_chance_level(default_dataset, default_features):
    patients = sorted(default_dataset.patient_labels())
    labels = [default_dataset.patient_labels()[p] for p in patients]
    for seed in range(5):
        permuted = np.random.default_rng(seed).permutation(labels)
        relabelled = default_dataset.relabel(dict(zip(patients, (int(v) for v in permuted))))
        result = run_experiment(relabelled, 'hdl', CONFIG, features=default_features)
        assert result.test_report.auc == pytest.approx(0.5, abs=0.15)


def test_informative_embeddings_keep_hybrid_performance(default_dataset, default_features, hdl_result):
    labels = dict(zip(default_dataset.scan_ids, default_dataset.labels.tolist()))
    table = append_label_signal(standin_embedder(default_dataset), labels, seed=0, strength=4.0)
    hybrid = run_experiment(default_dataset, 'hybrid', CONFIG, features=default_features, embeddings=table)
    assert hybrid.features.n_features == 37 + 129
    assert hybrid.test_report.auc >= hdl_result.test_report.auc - 0.02


def test_noise_embeddings_do_not_break_the_hybrid(default_dataset, default_features):
    rng = np.random.default_rng(0)
    noise = EmbeddingTable(tuple(default_dataset.scan_ids), rng.standard_normal((len(default_dataset), 128)))
    hybrid = run_experiment(default_dataset, 'hybrid', CONFIG, features=default_features, embeddings=noise)
    assert hybrid.test_report.auc >= 0.8
    deep = run_experiment(default_dataset, 'deep', CONFIG, embeddings=noise)
    assert deep.test_report.auc is not None
    assert 0.0 <= deep.test_report.auc <= 1.0
