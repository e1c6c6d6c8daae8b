import numpy as np
import pytest
from pydantic import ValidationError

from octglaucoma.errors import ConflictingLabelError, DimensionMismatchError, DuplicateScanIdError
from octglaucoma.models import Dataset, FeatureMatrix, GrayImage, feature_family


def test_gray_image_rejects_out_of_range_values():
    with pytest.raises(ValidationError):
        GrayImage(pixels=np.full((4, 4), 256.0))
    with pytest.raises(ValidationError):
        GrayImage(pixels=np.zeros((0, 4)))


def test_gray_image_is_read_only():
    image = GrayImage(pixels=np.zeros((3, 5)))
    assert (image.height, image.width) == (3, 5)
    with pytest.raises(ValueError):
        image.pixels[0, 0] = 1.0


def test_scan_boundaries_are_validated(make_scan):
    pixels = np.zeros((16, 8))
    with pytest.raises(ValidationError):
        make_scan(pixels, upper=np.full(8, 5), lower=np.full(8, 4))
    with pytest.raises(ValidationError):
        make_scan(pixels, upper=np.full(8, 2), lower=np.full(8, 16))
    with pytest.raises(ValidationError):
        make_scan(pixels, upper=np.full(7, 2), lower=np.full(7, 4))
    with pytest.raises(ValidationError):
        make_scan(pixels, axial_scale=0.0)


def test_record_accepts_label_names(make_record):
    assert make_record('s1', 'p1', 'glaucoma').label == 1
    assert make_record('s1', 'p1', 'Normal').label == 0
    with pytest.raises(ValidationError):
        make_record('s1', 'p1', 'suspect')


def test_dataset_invariants(make_record):
    a = make_record('s1', 'p1', 0)
    with pytest.raises(DuplicateScanIdError):
        Dataset(records=(a, make_record('s1', 'p2', 1)))
    with pytest.raises(ConflictingLabelError):
        Dataset(records=(a, make_record('s2', 'p1', 1)))


def test_dataset_views(make_record):
    dataset = Dataset(records=(
        make_record('s1', 'p1', 0), make_record('s2', 'p2', 1), make_record('s3', 'p1', 0),
    ))
    assert dataset.scan_ids == ['s1', 's2', 's3']
    assert dataset.patient_labels() == {'p1': 0, 'p2': 1}
    assert dataset.subset(['p1']).scan_ids == ['s1', 's3']
    swapped = dataset.relabel({'p1': 1, 'p2': 0})
    assert list(swapped.labels) == [1, 0, 1]


def test_feature_matrix_invariants():
    with pytest.raises(DimensionMismatchError):
        FeatureMatrix(('a', 'b'), ('thick.h1',), np.zeros((3, 1)))
    with pytest.raises(DimensionMismatchError):
        FeatureMatrix(('a',), ('thick.h1', 'thick.h1'), np.zeros((1, 2)))
    with pytest.raises(DimensionMismatchError):
        FeatureMatrix(('a',), ('thick.h1',), np.array([[np.nan]]))


def test_feature_matrix_selection_and_stacking():
    m = FeatureMatrix(('a', 'b', 'c'), ('thick.h1', 'glcm.mean.o1'), np.arange(6.0).reshape(3, 2))
    assert m.select_instances(['c', 'a']).values.tolist() == [[4.0, 5.0], [0.0, 1.0]]
    assert m.select_features(['glcm.mean.o1']).values.ravel().tolist() == [1.0, 3.0, 5.0]
    with pytest.raises(DimensionMismatchError):
        m.select_instances(['z'])
    with pytest.raises(DimensionMismatchError):
        m.select_features(['hurst.a0'])

    other = FeatureMatrix(('c', 'b', 'a'), ('emb.0',), np.array([[9.0], [8.0], [7.0]]))
    stacked = m.hstack(other)
    assert stacked.feature_names == ('thick.h1', 'glcm.mean.o1', 'emb.0')
    assert stacked.column('emb.0').tolist() == [7.0, 8.0, 9.0]
    assert stacked.families() == ['thick', 'glcm', 'emb']
    assert list(m.to_frame().columns) == ['scan_id', 'thick.h1', 'glcm.mean.o1']


def test_feature_family():
    assert feature_family('lbpv.p16r2.b3') == 'lbpv'
    assert feature_family('demo.age') == 'demo'
