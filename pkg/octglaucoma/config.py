"""
Configuration Module

This module handles process settings and experiment configuration.

- Settings: process-wide values read from environment variables (optionally from
  a .env file through python-dotenv), with a validate() helper.
- ExperimentConfig: every knob of an experiment (seeds, ratios, descriptor
  toggles, MLP hyperparameters, embedding source). It is stored as a flat
  ``key=value`` text file and validated with Pydantic.
"""

import hashlib
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .errors import ConfigError, MissingFileError

# Load environment variables from .env file
load_dotenv()


class Settings:
    """Process settings read from the environment."""

    LOG_LEVEL: str = os.getenv('OCTG_LOG_LEVEL', 'INFO')
    WORKERS: int = int(os.getenv('OCTG_WORKERS', '1'))

    @classmethod
    def validate(cls) -> List[str]:
        """
        Validate the settings.

        Returns:
            List[str]: List of validation errors, empty if all valid
        """
        errors = []
        if cls.LOG_LEVEL.upper() not in {'DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'}:
            errors.append(f"OCTG_LOG_LEVEL has unknown level {cls.LOG_LEVEL!r}")
        if cls.WORKERS < 1:
            errors.append("OCTG_WORKERS must be at least 1")
        return errors


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    return value


def _parse_pairs(value: Any) -> Any:
    """Parse ``"a:b,c:d"`` into ``[(a, b), (c, d)]``."""
    if not isinstance(value, str):
        return value
    pairs = []
    for item in _split_list(value):
        parts = item.split(':')
        if len(parts) != 2:
            raise ValueError(f"expected 'a:b' pairs, got {item!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


class ExperimentConfig(BaseModel):
    """
    Complete experiment configuration.

    Attributes:
        split_seed, fold_seed, train_seed, embed_seed (int): Named seeds; all
            randomness of a run flows from them.
        train_ratio (float): Fraction of patients per class used for training.
        k_folds (int): Number of internal cross-validation folds.
        alpha (float): Significance level of the selection tests.
        redundancy_r (float): |r| threshold above which two features are redundant.
        glcm_levels (int): Gray levels of the co-occurrence matrix.
        glcm_offsets: (row-shift, col-shift) pairs.
        lbp_pairs: (P, R) pairs; each adds one LBPV block.
        thickness_edges: Histogram edges of the thickness descriptor.
        thickness_proportions (bool): Emit bin proportions instead of counts.
        hurst_angles: Directions (degrees) of the Hurst features.
        hidden_units, learning_rate, epochs, batch_size, optimizer: MLP training.
        validation_fraction (float): Patient fraction held out of each training
            set to pick the best epoch (0 disables it).
        threshold (float): Decision threshold for confusion-based metrics.
        embedding_path (Optional[str]): Embedding table for hybrid/deep runs.
        standin_embedder (bool): Use the seeded stand-in embedder instead.
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    split_seed: int = 0
    fold_seed: int = 1
    train_seed: int = 2
    embed_seed: int = 3

    train_ratio: float = 0.8
    k_folds: int = 5

    alpha: float = 0.05
    redundancy_r: float = 0.95

    glcm_levels: int = 8
    glcm_offsets: Tuple[Tuple[int, int], ...] = ((-2, 0), (-2, 2))
    lbp_pairs: Tuple[Tuple[int, int], ...] = ((8, 1),)
    thickness_edges: Tuple[float, ...] = (0.0, 15.0, 30.0, 45.0, 100.0)
    thickness_proportions: bool = False
    hurst_angles: Tuple[float, ...] = (0.0, 30.0, 45.0, 60.0, 90.0)
    hurst_min_run: int = 32
    hurst_min_window: int = 8

    use_thickness: bool = True
    use_glcm: bool = True
    use_lbpv: bool = True
    use_hurst: bool = True
    use_demographics: bool = True

    hidden_units: int = 8
    learning_rate: float = 0.001
    epochs: int = 300
    batch_size: int = 32
    optimizer: Literal['adagrad', 'sgd'] = 'adagrad'
    validation_fraction: float = 0.2
    threshold: float = 0.5

    embedding_path: Optional[str] = None
    embedding_dim: int = 128
    standin_embedder: bool = False

    workers: int = 1

    @field_validator('glcm_offsets', 'lbp_pairs', mode='before')
    @classmethod
    def parse_pairs(cls, v):
        return _parse_pairs(v)

    @field_validator('thickness_edges', 'hurst_angles', mode='before')
    @classmethod
    def parse_float_lists(cls, v):
        return _split_list(v)

    @field_validator('embedding_path', mode='before')
    @classmethod
    def empty_path_is_none(cls, v):
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @field_validator('train_ratio', 'alpha', 'threshold')
    @classmethod
    def validate_open_unit(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError('must lie strictly between 0 and 1')
        return v

    @field_validator('validation_fraction')
    @classmethod
    def validate_validation_fraction(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError('must lie in [0, 1)')
        return v

    @field_validator('redundancy_r')
    @classmethod
    def validate_redundancy(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError('must lie in (0, 1]')
        return v

    @field_validator('glcm_offsets')
    @classmethod
    def validate_offsets(cls, v):
        if not v:
            raise ValueError('at least one offset is required')
        if any(dr == 0 and dc == 0 for dr, dc in v):
            raise ValueError('offsets must be nonzero')
        return v

    @field_validator('lbp_pairs')
    @classmethod
    def validate_lbp_pairs(cls, v):
        if not v:
            raise ValueError('at least one (P, R) pair is required')
        for p, r in v:
            if p < 4 or r < 1:
                raise ValueError('LBP pairs need P >= 4 and R >= 1')
        if len(set(v)) != len(v):
            raise ValueError('(P, R) pairs must be distinct')
        return v

    @field_validator('thickness_edges')
    @classmethod
    def validate_edges(cls, v):
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError('edges must be strictly increasing with at least 2 values')
        return v

    @field_validator('hurst_angles')
    @classmethod
    def validate_angles(cls, v):
        if len(set(v)) != len(v) or any(not 0.0 <= a < 180.0 for a in v):
            raise ValueError('angles must be distinct and within [0, 180)')
        return v

    @field_validator('glcm_levels')
    @classmethod
    def validate_levels(cls, v):
        if v < 2:
            raise ValueError('at least 2 gray levels are required')
        return v

    @field_validator('split_seed', 'fold_seed', 'train_seed', 'embed_seed')
    @classmethod
    def validate_seed(cls, v):
        if v < 0:
            raise ValueError('seeds must be non-negative')
        return v

    @field_validator('k_folds')
    @classmethod
    def validate_k(cls, v):
        if v < 2:
            raise ValueError('k_folds must be at least 2')
        return v

    @field_validator('hidden_units', 'batch_size', 'embedding_dim', 'workers',
                     'hurst_min_run', 'hurst_min_window')
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('must be at least 1')
        return v

    @field_validator('epochs')
    @classmethod
    def validate_epochs(cls, v):
        if v < 0:
            raise ValueError('epochs cannot be negative')
        return v

    @field_validator('learning_rate')
    @classmethod
    def validate_learning_rate(cls, v):
        if v <= 0:
            raise ValueError('learning_rate must be positive')
        return v

    @model_validator(mode='after')
    def validate_toggles(self):
        if not any([self.use_thickness, self.use_glcm, self.use_lbpv,
                    self.use_hurst, self.use_demographics]):
            raise ValueError('at least one descriptor family must be enabled')
        return self

    def canonical_text(self) -> str:
        """Return the sorted ``key=value`` dump used for hashing and saving."""
        lines = []
        for key, value in sorted(self.model_dump(exclude={"workers"}).items()):
            lines.append(f"{key}={_format_value(value)}")
        return '\n'.join(lines) + '\n'

    def config_hash(self) -> str:
        """SHA-256 of the canonical text, shortened to 16 hex digits."""
        return hashlib.sha256(self.canonical_text().encode('utf-8')).hexdigest()[:16]

    def with_seed(self, seed: int) -> 'ExperimentConfig':
        """Return a copy whose four named seeds derive from one master seed."""
        if seed < 0:
            raise ConfigError(f"seed must be non-negative, got {seed}")
        return self.model_copy(update={
            'split_seed': seed,
            'fold_seed': seed + 1,
            'train_seed': seed + 2,
            'embed_seed': seed + 3,
        })


def _format_value(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return ','.join(f"{a}:{b}" for a, b in value)
        return ','.join(repr(item) if isinstance(item, float) else str(item) for item in value)
    return str(value)


def load_experiment_config(path: Optional[Union[str, Path]] = None,
                           overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Load an experiment configuration from a flat ``key=value`` file.

    Args:
        path: Configuration file; None yields the defaults.
        overrides: Values applied on top of the file (e.g. command-line flags).

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        MissingFileError: If the file does not exist
        ConfigError: If a key is unknown or a value is invalid
    """
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"configuration file not found: {path}")
        values.update({k: v for k, v in dotenv_values(path).items() if v is not None})
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        problems = '; '.join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from e


def save_experiment_config(config: ExperimentConfig, path: Union[str, Path], provenance: Optional[str] = None) -> None:
    """
    Write the configuration in the same flat format it is read from.

    The optional ``#`` provenance line is read back as a comment.
    """
    Path(path).write_text((provenance or '') + config.canonical_text(), encoding='utf-8')
