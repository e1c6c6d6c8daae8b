"""
Synthetic OCT Data Module

This module generates seeded OCT-like circumpapillary B-scans with their
segmentation, standing in for a clinical database.

Features:
- Smooth upper RNFL boundary; lower boundary = upper + thickness profile with
  a class-dependent mean, a two-hump angular modulation and seeded noise
- Retina band below the upper boundary with a bright RNFL, a class-dependent
  texture contrast and multiplicative gamma speckle
- Demographics per patient: class-dependent age (clipped to [40, 90]) and a
  uniformly drawn gender
- One generator per patient seeded from (seed, class, patient index), so the
  output does not depend on generation order
- SynthParams.ablated() removes every class signal for sanity checks
"""

import logging
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import ndimage

from .models import GLAUCOMA, NORMAL, Dataset, GrayImage, ScanRecord, SegmentedScan

logger = logging.getLogger(__name__)

UPPER_DEPTH = 0.22
UPPER_SWING = 0.03
RETINA_DEPTH = 0.45
BACKGROUND = 20.0
RETINA_LEVEL = 90.0
RNFL_LEVEL = 170.0


class SynthParams(BaseModel):
    """
    Generator parameters.

    Attributes:
        n_patients (int): Patients per class
        scans_per_patient (int): Scans generated for each patient
        height, width (int): Image size in pixels (at least 64 x 64)
        normal_thickness_mean, normal_thickness_std (float): Per-scan mean RNFL thickness (pixels)
        glaucoma_thickness_mean, glaucoma_thickness_std (float): Same for glaucomatous scans
        modulation (float): Relative amplitude of the angular thickness modulation
        thickness_noise (float): Column-wise thickness noise (pixels)
        speckle (float): Coefficient of variation of the multiplicative speckle
        texture_contrast (float): Retina texture amplitude of normal scans
        texture_offset (float): Extra texture amplitude of glaucomatous scans
        normal_age_mean, glaucoma_age_mean, age_std (float): Age distribution
        seed (int): Master seed
    """
    model_config = ConfigDict(frozen=True)

    n_patients: int = 50
    scans_per_patient: int = 2
    height: int = 248
    width: int = 384
    normal_thickness_mean: float = 55.0
    normal_thickness_std: float = 8.0
    glaucoma_thickness_mean: float = 30.0
    glaucoma_thickness_std: float = 8.0
    modulation: float = 0.25
    thickness_noise: float = 1.5
    speckle: float = 0.2
    texture_contrast: float = 12.0
    texture_offset: float = 8.0
    normal_age_mean: float = 55.0
    glaucoma_age_mean: float = 65.0
    age_std: float = 10.0
    seed: int = 0

    @field_validator('n_patients', 'scans_per_patient')
    @classmethod
    def validate_counts(cls, v):
        if v < 1:
            raise ValueError('must be at least 1')
        return v

    @field_validator('height', 'width')
    @classmethod
    def validate_size(cls, v):
        if v < 64:
            raise ValueError('images must be at least 64 x 64')
        return v

    @field_validator('normal_thickness_mean', 'glaucoma_thickness_mean')
    @classmethod
    def validate_means(cls, v):
        if v <= 0:
            raise ValueError('thickness means must be positive')
        return v

    @field_validator('normal_thickness_std', 'glaucoma_thickness_std', 'thickness_noise', 'speckle',
                     'texture_contrast', 'texture_offset', 'age_std')
    @classmethod
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError('must be non-negative')
        return v

    @field_validator('modulation')
    @classmethod
    def validate_modulation(cls, v):
        if not 0 <= v < 1:
            raise ValueError('modulation must lie in [0, 1)')
        return v

    @field_validator('seed')
    @classmethod
    def validate_seed(cls, v):
        if v < 0:
            raise ValueError('seed must be non-negative')
        return v

    @model_validator(mode='after')
    def validate_fit(self):
        band = int(round(RETINA_DEPTH * self.height))
        largest = max(self.normal_thickness_mean, self.glaucoma_thickness_mean) * (1 + self.modulation)
        if largest >= band:
            raise ValueError(f'mean thickness {largest:g} does not fit the {band}-pixel retina band')
        return self

    def ablated(self) -> 'SynthParams':
        """Copy with identical class distributions (no thickness, texture or age signal)."""
        return self.model_copy(update={
            'glaucoma_thickness_mean': self.normal_thickness_mean,
            'glaucoma_thickness_std': self.normal_thickness_std,
            'texture_offset': 0.0,
            'glaucoma_age_mean': self.normal_age_mean,
        })


def _scan(params: SynthParams, label: int, rng: np.random.Generator) -> SegmentedScan:
    height, width = params.height, params.width
    columns = np.arange(width)
    phase = 2.0 * np.pi * columns / width
    band = int(round(RETINA_DEPTH * height))

    upper = np.rint(height * (UPPER_DEPTH + UPPER_SWING * np.sin(phase + rng.uniform(0, 2 * np.pi))))
    upper = upper.astype(np.int64)

    if label == GLAUCOMA:
        mean, std = params.glaucoma_thickness_mean, params.glaucoma_thickness_std
    else:
        mean, std = params.normal_thickness_mean, params.normal_thickness_std
    scan_mean = max(1.0, rng.normal(mean, std))
    noise = ndimage.gaussian_filter1d(rng.normal(0.0, params.thickness_noise, width), 2.0, mode='wrap')
    thickness = scan_mean * (1.0 + params.modulation * np.cos(2.0 * phase)) + noise
    thickness = np.clip(np.rint(thickness), 0, band - 2).astype(np.int64)
    lower = upper + thickness
    bottom = upper + band

    rows = np.arange(height)[:, None]
    retina = (rows >= upper[None, :]) & (rows <= bottom[None, :])
    rnfl = (rows >= upper[None, :]) & (rows <= lower[None, :])

    texture = ndimage.gaussian_filter(rng.standard_normal((height, width)), 1.5)
    texture /= texture.std() or 1.0
    amplitude = params.texture_contrast + (params.texture_offset if label == GLAUCOMA else 0.0)

    pixels = np.full((height, width), BACKGROUND)
    pixels[retina] = RETINA_LEVEL + amplitude * texture[retina]
    pixels[rnfl] = RNFL_LEVEL + amplitude * texture[rnfl]
    if params.speckle > 0:
        shape = 1.0 / params.speckle ** 2
        pixels = pixels * rng.gamma(shape, 1.0 / shape, size=pixels.shape)
    pixels = np.clip(np.rint(pixels), 0, 255)

    return SegmentedScan(image=GrayImage(pixels=pixels), rnfl_upper=upper, rnfl_lower=lower,
                         retina_mask=retina, axial_scale=1.0)


def _patient(params: SynthParams, label: int, index: int) -> List[ScanRecord]:
    rng = np.random.default_rng([params.seed, label, index])
    prefix = 'G' if label == GLAUCOMA else 'N'
    patient_id = f'{prefix}{index:03d}'
    age_mean = params.glaucoma_age_mean if label == GLAUCOMA else params.normal_age_mean
    age = float(np.clip(np.round(rng.normal(age_mean, params.age_std), 1), 40.0, 90.0))
    gender = int(rng.integers(0, 2))
    return [
        ScanRecord(scan_id=f'{patient_id}_s{k}', patient_id=patient_id, label=label,
                   age=age, gender=gender, scan=_scan(params, label, rng))
        for k in range(params.scans_per_patient)
    ]


def generate(params: SynthParams = SynthParams()) -> Dataset:
    """
    Generate a labelled dataset.

    Normal patients (N000, N001, ...) come first, then glaucomatous ones
    (G000, ...); scans are named <patient>_s<k>.

    Example:
        >>> len(generate(SynthParams(n_patients=50)))
        200
    """
    records: List[ScanRecord] = []
    for label in (NORMAL, GLAUCOMA):
        for index in range(params.n_patients):
            records.extend(_patient(params, label, index))
    dataset = Dataset(records=tuple(records))
    logger.info(f"Generated {len(dataset)} synthetic scans ({params.n_patients} patients per class, seed {params.seed})")
    return dataset
