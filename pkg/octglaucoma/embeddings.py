"""
Deep Embedding Module

This module brings externally computed deep features into the pipeline.

Features:
- EmbeddingTable: scan_id -> fixed-length vector of finite values
- CSV ingestion in the feature-matrix layout (``scan_id,emb.0,...``), with
  ragged rows reported by file line number
- A deterministic stand-in embedder: x0.5 down-sampling of each image
  followed by a seeded fixed random projection
- append_label_signal: adds one label-correlated dimension to a table
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .dataset_io import write_feature_matrix
from .errors import DimensionMismatchError, EmbeddingFormatError, EmptyInputError, MissingFileError
from .imaging import downsample_half
from .models import Dataset, FeatureMatrix

logger = logging.getLogger(__name__)

DEFAULT_DIM = 128
PREFIX = 'emb'


def embedding_names(dim: int) -> Tuple[str, ...]:
    return tuple(f'{PREFIX}.{k}' for k in range(dim))


@dataclass(frozen=True)
class EmbeddingTable:
    """
    Embedding vectors keyed by scan id.

    Attributes:
        scan_ids (Tuple[str, ...]): Row keys, unique
        values (np.ndarray): (rows, dim) finite values
    """
    scan_ids: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != len(self.scan_ids):
            raise EmbeddingFormatError(f"embedding values of shape {values.shape} for {len(self.scan_ids)} scans")
        if len(set(self.scan_ids)) != len(self.scan_ids):
            raise EmbeddingFormatError('duplicate scan_id in embedding table')
        if not np.all(np.isfinite(values)):
            raise EmbeddingFormatError('embedding values must be finite')
        values.flags.writeable = False
        object.__setattr__(self, 'scan_ids', tuple(self.scan_ids))
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def __len__(self) -> int:
        return len(self.scan_ids)

    def to_matrix(self, scan_ids: Optional[Sequence[str]] = None) -> FeatureMatrix:
        """
        Join the table onto instances as emb.0 ... emb.<dim-1> columns.

        Raises:
            EmbeddingFormatError: If a requested scan_id has no embedding
        """
        ids = self.scan_ids if scan_ids is None else tuple(scan_ids)
        position = {sid: i for i, sid in enumerate(self.scan_ids)}
        missing = [sid for sid in ids if sid not in position]
        if missing:
            raise EmbeddingFormatError(f"no embedding for scan_id(s) {missing[:5]}")
        rows = [position[sid] for sid in ids]
        return FeatureMatrix(ids, embedding_names(self.dim), self.values[rows, :])


def load_embeddings(path: Union[str, Path], expected_dim: Optional[int] = None) -> EmbeddingTable:
    """
    Read an embedding table.

    Args:
        path: CSV file with a ``scan_id,...`` header and one row per scan
        expected_dim: Required vector length, if known

    Returns:
        EmbeddingTable: The validated table

    Raises:
        MissingFileError: If the file does not exist
        EmbeddingFormatError: On ragged rows (names the line), a wrong
            dimension, or non-numeric values
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"embedding file not found: {path}")
    header = None
    ids, rows = [], []
    with open(path, newline='', encoding='utf-8') as f:
        for line_number, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].startswith('#'):
                continue
            if header is None:
                header = row
                if header[0] != 'scan_id':
                    raise EmbeddingFormatError(f"{path}: header must start with 'scan_id'")
                continue
            if len(row) != len(header):
                raise EmbeddingFormatError(
                    f"{path} row {line_number}: expected {len(header) - 1} values, got {len(row) - 1}"
                )
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as e:
                raise EmbeddingFormatError(f"{path} row {line_number}: {e}") from e
            ids.append(row[0].strip())
    if header is None:
        raise EmbeddingFormatError(f"{path}: no header line")
    dim = len(header) - 1
    if expected_dim is not None and dim != expected_dim:
        raise EmbeddingFormatError(f"{path}: dimension {dim}, expected {expected_dim}")
    table = EmbeddingTable(tuple(ids), np.array(rows, dtype=np.float64).reshape(len(ids), dim))
    logger.info(f"Loaded {len(table)} embeddings of dimension {dim} from {path}")
    return table


def write_embeddings(table: EmbeddingTable, path: Union[str, Path], provenance: Optional[str] = None) -> None:
    """Write a table in the layout load_embeddings reads."""
    write_feature_matrix(table.to_matrix(), path, provenance)


def standin_embedder(dataset: Dataset, seed: int = 3, dim: int = DEFAULT_DIM) -> EmbeddingTable:
    """
    Embed every scan with a fixed random projection.

    Each image is down-sampled by two (2x2 block mean), scaled to [0, 1] and
    projected with a seeded (dim, pixels) standard-normal matrix divided by
    sqrt(pixels). Identical images give identical vectors.

    Raises:
        EmptyInputError: If the dataset is empty
        DimensionMismatchError: If images differ in size
    """
    if len(dataset) == 0:
        raise EmptyInputError('cannot embed an empty dataset')
    images = [downsample_half(r.scan.image.pixels) / 255.0 for r in dataset]
    shape = images[0].shape
    if any(img.shape != shape for img in images):
        raise DimensionMismatchError('the stand-in embedder needs images of one size')
    pixels = int(np.prod(shape))
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((dim, pixels)) / np.sqrt(pixels)
    flat = np.stack([img.ravel() for img in images])
    logger.info(f"Embedded {len(dataset)} scans with the stand-in embedder (dim {dim}, seed {seed})")
    return EmbeddingTable(tuple(dataset.scan_ids), flat @ projection.T)


def append_label_signal(table: EmbeddingTable, labels: Mapping[str, int], seed: int,
                        strength: float = 1.0) -> EmbeddingTable:
    """
    Add one dimension equal to strength * label plus standard-normal noise.

    Args:
        table: Source table
        labels: scan_id -> 0/1 label for every row
        seed: Noise seed
        strength: Separation between the class means of the new dimension
    """
    rng = np.random.default_rng(seed)
    signal = np.array([strength * labels[sid] for sid in table.scan_ids], dtype=np.float64)
    signal = signal + rng.standard_normal(len(table))
    return EmbeddingTable(table.scan_ids, np.column_stack([table.values, signal]))
