"""
Dataset and Feature-Matrix I/O Module

This module reads and writes the on-disk artifacts of the pipeline.

Manifest layout (comma-separated, one header line):
    scan_id, patient_id, label, age, gender, image_path, upper_boundary_path,
    lower_boundary_path, retina_mask_path[, axial_scale]

- Images and retina masks are 8-bit portable gray maps (PGM); masks are
  nonzero inside the retina.
- Boundaries are one-line text files of integer row indices, one per column.
- Relative paths resolve against the manifest's directory.

Feature-matrix layout: optional ``#`` provenance lines, a header
``scan_id,<feature names...>``, then one row per instance. Values are written
with shortest round-trip precision, so a read after a write is exact.
"""

import csv
import logging
from io import StringIO
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from PIL import Image, UnidentifiedImageError
from pydantic import ValidationError

from .errors import (
    ConflictingLabelError,
    DuplicateScanIdError,
    FeatureMatrixFormatError,
    ImageFormatError,
    MalformedRowError,
    MissingFileError,
)
from .models import Dataset, FeatureMatrix, GrayImage, LABEL_NAMES, ScanRecord, SegmentedScan

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.csv'
MANIFEST_COLUMNS = [
    'scan_id', 'patient_id', 'label', 'age', 'gender', 'image_path',
    'upper_boundary_path', 'lower_boundary_path', 'retina_mask_path', 'axial_scale',
]
OPTIONAL_COLUMNS = {'axial_scale'}

PathLike = Union[str, Path]


def resolve_manifest_path(path: PathLike) -> Path:
    """
    Resolve a user-supplied dataset location to a manifest file.

    Accepts the manifest itself, its directory, or the manifest path without
    its ``.csv`` suffix.
    """
    path = Path(path)
    if path.is_dir():
        return path / MANIFEST_NAME
    if not path.exists() and path.with_suffix('.csv').is_file():
        return path.with_suffix('.csv')
    return path


def read_pgm(path: PathLike) -> np.ndarray:
    """
    Read an 8-bit gray map into a float array.

    Raises:
        MissingFileError: If the file does not exist
        ImageFormatError: If the file is not an 8-bit grayscale image
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"image not found: {path}")
    try:
        with Image.open(path) as img:
            if img.mode != 'L':
                raise ImageFormatError(f"{path}: expected 8-bit grayscale, got mode {img.mode}")
            return np.asarray(img, dtype=np.float64)
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: not a readable image") from e


def write_pgm(pixels: np.ndarray, path: PathLike) -> None:
    """Write an array as a binary 8-bit PGM (values are rounded and clipped)."""
    data = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(Path(path), format='PPM')


def read_boundary(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"boundary file not found: {path}")
    text = path.read_text(encoding='utf-8').split()
    return np.array([float(token) for token in text], dtype=np.float64)


def write_boundary(values: np.ndarray, path: PathLike) -> None:
    Path(path).write_text(' '.join(str(int(v)) for v in values) + '\n', encoding='utf-8')


def _resolve(base: Path, value: str) -> Path:
    candidate = Path(value)
    return candidate if candidate.is_absolute() else base / candidate


def _parse_row(row: dict, row_number: int, base: Path) -> ScanRecord:
    for column in MANIFEST_COLUMNS:
        if column not in OPTIONAL_COLUMNS and not str(row.get(column, '')).strip():
            raise MalformedRowError(row_number, f"missing value for column {column!r}")

    def load(loader, column):
        target = _resolve(base, row[column].strip())
        try:
            return loader(target)
        except MissingFileError as e:
            raise MissingFileError(f"manifest row {row_number}: {e}") from e
        except ImageFormatError as e:
            raise MalformedRowError(row_number, str(e)) from e
        except ValueError as e:
            raise MalformedRowError(row_number, f"{column}: {e}") from e

    pixels = load(read_pgm, 'image_path')
    upper = load(read_boundary, 'upper_boundary_path')
    lower = load(read_boundary, 'lower_boundary_path')
    mask = load(read_pgm, 'retina_mask_path') > 0

    scale_text = str(row.get('axial_scale', '') or '').strip()
    try:
        axial_scale = float(scale_text) if scale_text else 1.0
        age = float(row['age'])
    except ValueError as e:
        raise MalformedRowError(row_number, f"non-numeric value: {e}") from e

    try:
        scan = SegmentedScan(
            image=GrayImage(pixels=pixels),
            rnfl_upper=upper,
            rnfl_lower=lower,
            retina_mask=mask,
            axial_scale=axial_scale,
        )
        return ScanRecord(
            scan_id=row['scan_id'],
            patient_id=row['patient_id'],
            label=row['label'],
            age=age,
            gender=row['gender'],
            scan=scan,
        )
    except ValidationError as e:
        problems = '; '.join(
            f"{'.'.join(str(p) for p in err['loc']) or 'scan'}: {err['msg']}" for err in e.errors()
        )
        raise MalformedRowError(row_number, problems) from e


def load_dataset(manifest_path: PathLike) -> Dataset:
    """
    Load a dataset from a manifest file.

    Records keep manifest order, so loading the same manifest twice yields
    equal datasets.
    Row numbers in errors are file line numbers; blank and ``#`` lines are
    skipped but still counted.

    Args:
        manifest_path: Manifest file, its directory, or its path without suffix

    Returns:
        Dataset: The validated dataset (empty when the manifest has no rows)

    Raises:
        MissingFileError: If the manifest or a referenced file is missing
        MalformedRowError: If a row does not parse or fails validation
        DuplicateScanIdError: If a scan_id repeats
        ConflictingLabelError: If a patient appears with both labels
    """
    path = resolve_manifest_path(manifest_path)
    if not path.is_file():
        raise MissingFileError(f"manifest not found: {path}")
    # (file line number, text) of every line that is neither blank nor a comment
    content = [(number, line) for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1)
               if line.strip() and not line.lstrip().startswith('#')]
    if not content:
        logger.info(f"Manifest {path} is empty")
        return Dataset(records=())
    header_line = content[0][0]
    line_numbers = [number for number, _ in content[1:]]
    try:
        frame = pd.read_csv(StringIO('\n'.join(line for _, line in content)), dtype=str,
                            keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        raise MalformedRowError(header_line, f"cannot parse manifest: {e}") from e
    if len(frame) != len(line_numbers):
        raise MalformedRowError(header_line, 'manifest rows do not match its lines (quoted line breaks?)')

    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns and c not in OPTIONAL_COLUMNS]
    if missing:
        raise MalformedRowError(header_line, f"header lacks columns {missing}")

    base = path.parent
    records: List[ScanRecord] = []
    seen: dict = {}
    patient_labels: dict = {}
    for row_number, row in zip(line_numbers, frame.to_dict(orient='records')):
        record = _parse_row(row, row_number, base)
        if record.scan_id in seen:
            raise DuplicateScanIdError(
                f"manifest row {row_number}: scan_id {record.scan_id!r} already used on row {seen[record.scan_id]}"
            )
        seen[record.scan_id] = row_number
        known = patient_labels.setdefault(record.patient_id, record.label)
        if known != record.label:
            raise ConflictingLabelError(
                f"manifest row {row_number}: patient {record.patient_id!r} has conflicting labels "
                f"{LABEL_NAMES[known]} and {LABEL_NAMES[record.label]}"
            )
        records.append(record)

    dataset = Dataset(records=tuple(records))
    logger.info(f"Loaded {len(dataset)} scans from {path}")
    return dataset


def write_dataset(dataset: Dataset, out_dir: PathLike, provenance: Optional[str] = None) -> Path:
    """
    Write a dataset in the manifest layout.

    Args:
        dataset: Dataset to write
        out_dir: Target directory (created if needed)
        provenance: Optional ``#`` header line(s) written before the manifest header

    Returns:
        Path: The manifest file
    """
    out_dir = Path(out_dir)
    for sub in ('images', 'boundaries', 'masks'):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    rows = []
    for record in dataset:
        sid = record.scan_id
        scan = record.scan
        image_rel = f"images/{sid}.pgm"
        upper_rel = f"boundaries/{sid}_upper.txt"
        lower_rel = f"boundaries/{sid}_lower.txt"
        mask_rel = f"masks/{sid}_retina.pgm"
        write_pgm(scan.image.pixels, out_dir / image_rel)
        write_boundary(scan.rnfl_upper, out_dir / upper_rel)
        write_boundary(scan.rnfl_lower, out_dir / lower_rel)
        write_pgm(scan.retina_mask.astype(np.float64) * 255.0, out_dir / mask_rel)
        rows.append([
            sid, record.patient_id, LABEL_NAMES[record.label], repr(float(record.age)),
            str(record.gender), image_rel, upper_rel, lower_rel, mask_rel, repr(float(scan.axial_scale)),
        ])

    manifest = out_dir / MANIFEST_NAME
    with open(manifest, 'w', newline='', encoding='utf-8') as f:
        if provenance:
            f.write(provenance)
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)
    logger.info(f"Wrote {len(dataset)} scans to {manifest}")
    return manifest


def write_feature_matrix(matrix: FeatureMatrix, path: PathLike, provenance: Optional[str] = None) -> None:
    """
    Write a feature matrix as comma-separated text.

    Args:
        matrix: Matrix to write
        path: Target file
        provenance: Optional ``#`` header line(s) written first
    """
    with open(Path(path), 'w', newline='', encoding='utf-8') as f:
        if provenance:
            f.write(provenance)
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['scan_id', *matrix.feature_names])
        for sid, row in zip(matrix.instance_ids, matrix.values):
            writer.writerow([sid, *(repr(float(v)) for v in row)])


def _read_header(path: Path) -> List[str]:
    with open(path, newline='', encoding='utf-8') as f:
        for line in f:
            if line.startswith('#') or not line.strip():
                continue
            return next(csv.reader([line]))
    return []


def read_feature_matrix(path: PathLike) -> FeatureMatrix:
    """
    Read a feature matrix written by write_feature_matrix.

    Raises:
        MissingFileError: If the file does not exist
        FeatureMatrixFormatError: On a duplicate or missing header, or bad values
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"feature matrix not found: {path}")
    header = _read_header(path)
    if not header or header[0] != 'scan_id':
        raise FeatureMatrixFormatError(f"{path}: header must start with 'scan_id'")
    names = header[1:]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise FeatureMatrixFormatError(f"{path}: duplicate column header(s) {duplicates}")

    try:
        frame = pd.read_csv(path, comment='#', dtype={'scan_id': str},
                            float_precision='round_trip', keep_default_na=False)
    except (pd.errors.ParserError, ValueError) as e:
        raise FeatureMatrixFormatError(f"{path}: {e}") from e

    try:
        values = frame[names].to_numpy(dtype=np.float64) if names else np.empty((len(frame), 0))
    except ValueError as e:
        raise FeatureMatrixFormatError(f"{path}: non-numeric value: {e}") from e
    if not np.all(np.isfinite(values)):
        raise FeatureMatrixFormatError(f"{path}: values must be finite")
    return FeatureMatrix(tuple(frame['scan_id'].tolist()), tuple(names), values)
