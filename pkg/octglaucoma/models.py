"""
Data Models for the Glaucoma Pipeline

This module defines the canonical data model shared by every other module.
Input-side models are Pydantic models with validation rules; the feature matrix,
which is produced rather than parsed, is a frozen dataclass that checks its
invariants on construction.

Key Models:
- GrayImage: grayscale B-scan, one intensity in [0, 255] per pixel
- SegmentedScan: image plus RNFL boundaries, retina mask and axial scale
- ScanRecord: one scan with patient, label and demographic metadata
- Dataset: ordered list of records with one label per patient
- FeatureMatrix: named feature columns x learning instances

All array fields are copied and made read-only, so values can be shared
between workers without copying.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import ConflictingLabelError, DimensionMismatchError, DuplicateScanIdError

NORMAL = 0
GLAUCOMA = 1
LABEL_NAMES = {NORMAL: 'normal', GLAUCOMA: 'glaucoma'}

FEATURE_FAMILIES = ('thick', 'glcm', 'lbpv', 'hurst', 'demo', 'emb')


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


class GrayImage(BaseModel):
    """
    Grayscale image stored row-major as a (height, width) float array.

    Attributes:
        pixels (np.ndarray): Intensities in [0, 255]
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray

    @field_validator('pixels', mode='before')
    @classmethod
    def validate_pixels(cls, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError('image must be a non-empty 2-D grid')
        if not np.all(np.isfinite(v)) or v.min() < 0 or v.max() > 255:
            raise ValueError('intensities must be finite and within [0, 255]')
        return _frozen(v)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


class SegmentedScan(BaseModel):
    """
    B-scan with its RNFL boundaries and retina region.

    Attributes:
        image (GrayImage): The B-scan
        rnfl_upper (np.ndarray): Per-column row index of the RNFL top boundary
        rnfl_lower (np.ndarray): Per-column row index of the RNFL bottom boundary
        retina_mask (np.ndarray): Boolean grid marking the retina region
        axial_scale (float): Microns per pixel along the axial direction
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image: GrayImage
    rnfl_upper: np.ndarray
    rnfl_lower: np.ndarray
    retina_mask: np.ndarray
    axial_scale: float = 1.0

    @field_validator('rnfl_upper', 'rnfl_lower', mode='before')
    @classmethod
    def validate_boundary(cls, v):
        v = np.asarray(v)
        if v.ndim != 1:
            raise ValueError('boundaries must be 1-D')
        if v.size and not np.all(np.equal(np.mod(v, 1), 0)):
            raise ValueError('boundaries must hold integer row indices')
        return _frozen(v.astype(np.int64))

    @field_validator('retina_mask', mode='before')
    @classmethod
    def validate_mask(cls, v):
        return _frozen(np.asarray(v).astype(bool))

    @field_validator('axial_scale')
    @classmethod
    def validate_axial_scale(cls, v):
        if not np.isfinite(v) or v <= 0:
            raise ValueError('axial_scale must be positive')
        return v

    @model_validator(mode='after')
    def validate_geometry(self):
        width, height = self.image.width, self.image.height
        if self.rnfl_upper.shape != (width,) or self.rnfl_lower.shape != (width,):
            raise ValueError(f'boundary arrays must have length {width} (image width)')
        if np.any(self.rnfl_upper < 0) or np.any(self.rnfl_upper > self.rnfl_lower) \
                or np.any(self.rnfl_lower >= height):
            raise ValueError('boundaries must satisfy 0 <= upper <= lower < height')
        if self.retina_mask.shape != self.image.pixels.shape:
            raise ValueError('retina_mask dimensions must match the image')
        return self


class ScanRecord(BaseModel):
    """
    One learning instance: a segmented scan with its metadata.

    Attributes:
        scan_id (str): Unique identifier within a dataset
        patient_id (str): Patient the scan belongs to
        label (int): 0 = normal, 1 = glaucoma
        age (float): Age in years
        gender (int): 0 or 1
        scan (SegmentedScan): Image and segmentation
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scan_id: str
    patient_id: str
    label: Literal[0, 1]
    age: float
    gender: Literal[0, 1]
    scan: SegmentedScan

    @field_validator('scan_id', 'patient_id')
    @classmethod
    def validate_identifier(cls, v):
        v = v.strip()
        if not v:
            raise ValueError('identifier cannot be empty')
        if ',' in v or '#' in v:
            raise ValueError('identifier cannot contain "," or "#"')
        return v

    @field_validator('label', mode='before')
    @classmethod
    def validate_label(cls, v):
        """Accept 0/1 or the class names."""
        if isinstance(v, str):
            text = v.strip().lower()
            names = {name: code for code, name in LABEL_NAMES.items()}
            if text in names:
                return names[text]
            if text in {'0', '1'}:
                return int(text)
            raise ValueError('label must be one of: normal, glaucoma, 0, 1')
        return v

    @field_validator('gender', mode='before')
    @classmethod
    def validate_gender(cls, v):
        if isinstance(v, str) and v.strip() in {'0', '1'}:
            return int(v.strip())
        return v

    @field_validator('age')
    @classmethod
    def validate_age(cls, v):
        if not np.isfinite(v) or v < 0:
            raise ValueError('age must be a non-negative number')
        return v


class Dataset(BaseModel):
    """
    Ordered collection of scan records.

    Every patient maps to exactly one label; scan ids are unique. Violations
    raise DuplicateScanIdError or ConflictingLabelError directly.
    """
    model_config = ConfigDict(frozen=True)

    records: Tuple[ScanRecord, ...] = ()

    @model_validator(mode='after')
    def validate_records(self):
        seen: Dict[str, int] = {}
        patient_labels: Dict[str, int] = {}
        for index, record in enumerate(self.records):
            if record.scan_id in seen:
                raise DuplicateScanIdError(
                    f"record {index + 1}: scan_id {record.scan_id!r} already used by record {seen[record.scan_id] + 1}"
                )
            seen[record.scan_id] = index
            known = patient_labels.setdefault(record.patient_id, record.label)
            if known != record.label:
                raise ConflictingLabelError(
                    f"record {index + 1}: patient {record.patient_id!r} has labels {known} and {record.label}"
                )
        return self

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def scan_ids(self) -> List[str]:
        return [r.scan_id for r in self.records]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    @property
    def patient_ids(self) -> List[str]:
        return [r.patient_id for r in self.records]

    def patient_labels(self) -> Dict[str, int]:
        """Map each patient to its label, in order of first appearance."""
        labels: Dict[str, int] = {}
        for r in self.records:
            labels.setdefault(r.patient_id, r.label)
        return labels

    def subset(self, patient_ids: Iterable[str]) -> 'Dataset':
        """Keep the records of the given patients, preserving record order."""
        wanted = set(patient_ids)
        return Dataset(records=tuple(r for r in self.records if r.patient_id in wanted))

    def relabel(self, patient_labels: Dict[str, int]) -> 'Dataset':
        """Return a copy where every record takes its patient's new label."""
        return Dataset(records=tuple(
            r.model_copy(update={'label': int(patient_labels[r.patient_id])}) for r in self.records
        ))


@dataclass(frozen=True)
class FeatureMatrix:
    """
    Named feature columns over learning instances.

    Attributes:
        instance_ids (Tuple[str, ...]): Scan ids, one per row
        feature_names (Tuple[str, ...]): Unique names carrying a family prefix
        values (np.ndarray): (instances, features) grid of finite floats
    """
    instance_ids: Tuple[str, ...]
    feature_names: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'instance_ids', tuple(self.instance_ids))
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        values = np.asarray(self.values, dtype=np.float64)
        if values.size == 0:
            values = values.reshape(len(self.instance_ids), len(self.feature_names))
        if values.shape != (len(self.instance_ids), len(self.feature_names)):
            raise DimensionMismatchError(
                f"values have shape {values.shape}, expected "
                f"({len(self.instance_ids)}, {len(self.feature_names)})"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            duplicates = sorted({n for n in self.feature_names if self.feature_names.count(n) > 1})
            raise DimensionMismatchError(f"duplicate feature names: {duplicates}")
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise DimensionMismatchError("duplicate instance ids")
        if not np.all(np.isfinite(values)):
            raise DimensionMismatchError("feature values must be finite")
        object.__setattr__(self, 'values', _frozen(values))

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def select_features(self, names: Sequence[str]) -> 'FeatureMatrix':
        """Keep the given columns, in the given order."""
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise DimensionMismatchError(f"features not in matrix: {missing[:5]}")
        index = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(self.instance_ids, tuple(names), self.values[:, index])

    def select_instances(self, ids: Sequence[str]) -> 'FeatureMatrix':
        """Keep the given rows, in the given order."""
        position = {sid: i for i, sid in enumerate(self.instance_ids)}
        missing = [sid for sid in ids if sid not in position]
        if missing:
            raise DimensionMismatchError(f"instances not in matrix: {missing[:5]}")
        rows = [position[sid] for sid in ids]
        return FeatureMatrix(tuple(ids), self.feature_names, self.values[rows, :])

    def hstack(self, other: 'FeatureMatrix') -> 'FeatureMatrix':
        """Concatenate columns of two matrices over the same instances."""
        if other.instance_ids != self.instance_ids:
            other = other.select_instances(self.instance_ids)
        return FeatureMatrix(
            self.instance_ids,
            self.feature_names + other.feature_names,
            np.hstack([self.values, other.values]),
        )

    def with_column(self, name: str, values: np.ndarray) -> 'FeatureMatrix':
        return FeatureMatrix(
            self.instance_ids,
            self.feature_names + (name,),
            np.column_stack([self.values, np.asarray(values, dtype=np.float64)]),
        )

    def families(self) -> List[str]:
        return [feature_family(n) for n in self.feature_names]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(self.feature_names))
        frame.insert(0, 'scan_id', list(self.instance_ids))
        return frame

    def equals(self, other: 'FeatureMatrix') -> bool:
        return (self.instance_ids == other.instance_ids
                and self.feature_names == other.feature_names
                and np.array_equal(self.values, other.values))


def feature_family(name: str) -> str:
    """Return the family prefix of a feature name (``glcm.energy.o1`` -> ``glcm``)."""
    return name.split('.', 1)[0]
