import numpy as np
import pytest

from octglaucoma.config import ExperimentConfig
from octglaucoma.errors import EmptyInputError, ScanExtractionError
from octglaucoma.extraction import extract_all, extract_scan
from octglaucoma.models import Dataset
from octglaucoma.texture import GLCM_STATS

DEFAULT_NAMES = (
    [f'thick.h{k}' for k in range(1, 5)] + ['thick.min', 'thick.max']
    + [f'glcm.{s}.o1' for s in GLCM_STATS] + [f'glcm.{s}.o2' for s in GLCM_STATS]
    + [f'lbpv.b{k}' for k in range(10)]
    + ['hurst.a0', 'hurst.a30', 'hurst.a45', 'hurst.a60', 'hurst.a90']
    + ['demo.age', 'demo.gender']
)


def test_default_columns(small_dataset, small_features):
    assert len(DEFAULT_NAMES) == 37
    assert small_features.feature_names == tuple(DEFAULT_NAMES)
    assert small_features.instance_ids == tuple(small_dataset.scan_ids)
    assert small_features.n_instances == 48


def test_demographics_are_copied(small_dataset, small_features):
    ages = small_features.column('demo.age')
    genders = small_features.column('demo.gender')
    for row, record in enumerate(small_dataset):
        assert ages[row] == record.age
        assert genders[row] == record.gender


def test_identical_scans_give_identical_rows(make_scan, make_record):
    scan = make_scan(np.random.default_rng(1).uniform(0, 255, size=(48, 48)).round())
    dataset = Dataset(records=(
        make_record('a', 'p1', 0, scan=scan),
        make_record('b', 'p2', 1, scan=scan),
    ))
    matrix = extract_all(dataset)
    assert np.array_equal(matrix.values[0], matrix.values[1])


def test_failures_name_the_scan(make_scan, make_record):
    pixels = np.random.default_rng(2).uniform(0, 255, size=(48, 48)).round()
    broken = make_scan(pixels, mask=np.zeros((48, 48), dtype=bool))
    dataset = Dataset(records=(make_record('ok', 'p1', 0), make_record('bad', 'p2', 1, scan=broken)))
    with pytest.raises(ScanExtractionError) as excinfo:
        extract_all(dataset)
    assert excinfo.value.scan_id == 'bad'
    assert excinfo.value.category == 'numeric'
    assert excinfo.value.exit_code == 4
    assert 'scan bad' in str(excinfo.value)


def test_worker_count_does_not_change_the_matrix(small_dataset, small_features):
    parallel = extract_all(small_dataset, ExperimentConfig(), workers=2)
    assert parallel.equals(small_features)


def test_family_toggles(small_dataset):
    subset = Dataset(records=small_dataset.records[:4])
    no_hurst = extract_all(subset, ExperimentConfig(use_hurst=False, use_demographics=False))
    assert no_hurst.feature_names == tuple(DEFAULT_NAMES[:30])

    thickness_only = extract_all(subset, ExperimentConfig(use_glcm=False, use_lbpv=False, use_hurst=False,
                                                          use_demographics=False, thickness_proportions=True))
    assert thickness_only.families() == ['thick'] * 6
    np.testing.assert_allclose(thickness_only.values[:, :4].sum(axis=1), 1.0, rtol=0, atol=1e-12)


def test_extra_lbp_pair_adds_a_block(small_dataset):
    record = small_dataset.records[0]
    config = ExperimentConfig(lbp_pairs=((8, 1), (16, 2)), use_hurst=False)
    features = extract_scan(record, config)
    assert 'lbpv.p16r2.b0' in features and 'lbpv.p16r2.b17' in features
    assert len(features) == 30 + 18 + 2


def test_empty_dataset():
    with pytest.raises(EmptyInputError):
        extract_all(Dataset())
