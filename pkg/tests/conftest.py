"""
Shared fixtures: small hand-built scans, a small synthetic cohort with its
extracted features, and the default-size synthetic cohort used by the
end-to-end checks. Extraction runs once per session.
"""

import numpy as np
import pytest

from octglaucoma.config import ExperimentConfig
from octglaucoma.extraction import extract_all
from octglaucoma.models import GrayImage, ScanRecord, SegmentedScan
from octglaucoma.synthetic import SynthParams, generate

SMALL_PARAMS = SynthParams(
    n_patients=12,
    scans_per_patient=2,
    height=128,
    width=128,
    normal_thickness_mean=32.0,
    normal_thickness_std=4.0,
    glaucoma_thickness_mean=16.0,
    glaucoma_thickness_std=4.0,
    seed=5,
)


@pytest.fixture
def make_scan():
    """Build a SegmentedScan; defaults to a full-image retina mask."""

    def build(pixels, upper=None, lower=None, mask=None, axial_scale=1.0):
        pixels = np.asarray(pixels, dtype=np.float64)
        height, width = pixels.shape
        upper = np.full(width, min(2, height - 1)) if upper is None else upper
        lower = np.full(width, min(6, height - 1)) if lower is None else lower
        mask = np.ones((height, width), dtype=bool) if mask is None else mask
        return SegmentedScan(image=GrayImage(pixels=pixels), rnfl_upper=upper, rnfl_lower=lower,
                             retina_mask=mask, axial_scale=axial_scale)

    return build


@pytest.fixture
def make_record(make_scan):
    """Build a ScanRecord around a small noisy scan."""

    def build(scan_id, patient_id, label, age=60.0, gender=0, scan=None, seed=0):
        if scan is None:
            rng = np.random.default_rng(seed)
            scan = make_scan(rng.uniform(0, 255, size=(48, 48)).round())
        return ScanRecord(scan_id=scan_id, patient_id=patient_id, label=label,
                          age=age, gender=gender, scan=scan)

    return build


@pytest.fixture(scope='session')
def small_dataset():
    return generate(SMALL_PARAMS)


@pytest.fixture(scope='session')
def small_features(small_dataset):
    return extract_all(small_dataset, ExperimentConfig())


@pytest.fixture
def fast_config():
    return ExperimentConfig(learning_rate=0.05, epochs=60)


@pytest.fixture(scope='session')
def default_dataset():
    return generate(SynthParams())


@pytest.fixture(scope='session')
def default_features(default_dataset):
    return extract_all(default_dataset, ExperimentConfig())
