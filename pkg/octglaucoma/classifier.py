"""
MLP Classifier Module

This module implements the binary classifier: a one-hidden-layer perceptron
trained from scratch on standardized features.

Features:
- Z-score standardizer fitted on training data only
- Forward pass sigmoid(w2 . relu(W1 x + b1) + b2)
- Exact analytic gradient of the mean binary cross-entropy
- Mini-batch training with per-parameter squared-gradient accumulation
  (Adagrad, epsilon 1e-8) or plain SGD; optional validation split selecting
  the best epoch
- Versioned text serialization with 17 significant digits

Key Functions:
- fit_standardizer / apply_standardizer
- mlp_forward / mlp_gradient / mlp_loss
- mlp_train
- predict_proba
- save_model / load_model
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    InsufficientClassError,
    MissingFileError,
    ModelFormatError,
    ZeroVarianceFeatureError,
)
from .models import FeatureMatrix

logger = logging.getLogger(__name__)

MODEL_MAGIC = 'octglaucoma-mlp'
MODEL_VERSION = 1
ADAGRAD_EPSILON = 1e-8
# closest floats to 0 and 1; saturated outputs are clipped to stay inside (0, 1)
PROBABILITY_RANGE = (float(np.nextafter(0.0, 1.0)), float(np.nextafter(1.0, 0.0)))
PARAMETERS = ('W1', 'b1', 'w2', 'b2')


@dataclass(frozen=True)
class Standardizer:
    """
    Per-feature z-score statistics.

    Attributes:
        feature_names (Tuple[str, ...]): Columns the statistics belong to
        mean (np.ndarray): Training means
        std (np.ndarray): Training population standard deviations (all > 0)
    """
    feature_names: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std


def fit_standardizer(matrix: FeatureMatrix) -> Standardizer:
    """
    Fit z-score statistics on a training matrix.

    Raises:
        EmptyInputError: If the matrix has no rows
        ZeroVarianceFeatureError: If a feature is constant (names the feature)

    Example:
        >>> m = FeatureMatrix(('a', 'b', 'c'), ('f',), np.array([[1.0], [2.0], [3.0]]))
        >>> apply_standardizer(fit_standardizer(m), m).values.std()
        1.0
    """
    if matrix.n_instances == 0:
        raise EmptyInputError('cannot standardize an empty matrix')
    mean = matrix.values.mean(axis=0)
    std = matrix.values.std(axis=0)
    for name, s in zip(matrix.feature_names, std):
        if s == 0:
            raise ZeroVarianceFeatureError(name)
    return Standardizer(matrix.feature_names, mean, std)


def apply_standardizer(standardizer: Standardizer, matrix: FeatureMatrix) -> FeatureMatrix:
    """Standardize the standardizer's columns of a matrix with the stored statistics."""
    missing = [n for n in standardizer.feature_names if n not in matrix.feature_names]
    if missing:
        raise DimensionMismatchError(f"matrix lacks standardized features {missing[:5]}")
    subset = matrix.select_features(standardizer.feature_names)
    return FeatureMatrix(subset.instance_ids, subset.feature_names, standardizer.transform(subset.values))


@dataclass(frozen=True)
class MlpModel:
    """
    Trained perceptron with one hidden layer.

    Attributes:
        feature_names (Tuple[str, ...]): Input columns, in order
        W1 (np.ndarray): (hidden, input_dim) input weights
        b1 (np.ndarray): (hidden,) hidden biases
        w2 (np.ndarray): (hidden,) output weights
        b2 (float): Output bias
        standardizer (Optional[Standardizer]): Applied by predict_proba before the forward pass
    """
    feature_names: Tuple[str, ...]
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    standardizer: Optional[Standardizer] = None

    @property
    def input_dim(self) -> int:
        return int(self.W1.shape[1])

    @property
    def hidden(self) -> int:
        return int(self.W1.shape[0])

    def parameters(self) -> Dict[str, np.ndarray]:
        """Copies of the parameters; b2 as a 1-element array."""
        return {'W1': self.W1.copy(), 'b1': self.b1.copy(), 'w2': self.w2.copy(),
                'b2': np.array([self.b2], dtype=np.float64)}

    def with_parameters(self, params: Dict[str, np.ndarray]) -> 'MlpModel':
        return replace(self, W1=params['W1'].copy(), b1=params['b1'].copy(),
                       w2=params['w2'].copy(), b2=float(params['b2'][0]))


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyperparameters.

    Attributes:
        learning_rate (float): Step size (> 0)
        epochs (int): Passes over the training data (>= 0)
        batch_size (int): Mini-batch size
        hidden_units (int): Width of the hidden layer
        optimizer (str): 'adagrad' or 'sgd'
        seed (int): Seed of the initialization and shuffling generator
    """
    learning_rate: float = 0.001
    epochs: int = 300
    batch_size: int = 32
    hidden_units: int = 8
    optimizer: str = 'adagrad'
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError('learning_rate must be positive')
        if self.epochs < 0:
            raise ValueError('epochs cannot be negative')
        if self.batch_size < 1 or self.hidden_units < 1:
            raise ValueError('batch_size and hidden_units must be at least 1')
        if self.optimizer not in ('adagrad', 'sgd'):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class LossTrace:
    """
    Loss per epoch; index 0 is the initialized model.

    Attributes:
        train (List[float]): Training loss
        validation (List[float]): Validation loss (empty without a validation set)
        best_epoch (int): Epoch whose parameters were returned
    """
    train: List[float] = field(default_factory=list)
    validation: List[float] = field(default_factory=list)
    best_epoch: int = 0


def _as_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def _logits(model_or_params, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(model_or_params, MlpModel):
        params = {'W1': model_or_params.W1, 'b1': model_or_params.b1,
                  'w2': model_or_params.w2, 'b2': np.array([model_or_params.b2])}
    else:
        params = model_or_params
    pre = x @ params['W1'].T + params['b1']
    hidden = np.maximum(pre, 0.0)
    return pre, hidden, hidden @ params['w2'] + params['b2'][0]


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """
    Probability of the positive class for standardized input rows.

    Args:
        model: Trained or initialized model
        x: (input_dim,) vector or (n, input_dim) matrix

    Returns:
        np.ndarray: Scalar array for a vector, (n,) array for a matrix

    Raises:
        DimensionMismatchError: If the input width differs from input_dim
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = _as_rows(x)
    if rows.shape[1] != model.input_dim:
        raise DimensionMismatchError(f"input has {rows.shape[1]} features, model expects {model.input_dim}")
    probabilities = np.clip(expit(_logits(model, rows)[2]), *PROBABILITY_RANGE)
    return probabilities[0] if single else probabilities


def _loss_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def mlp_loss(model: MlpModel, x, y) -> float:
    """Mean binary cross-entropy, computed from logits."""
    return _loss_from_logits(_logits(model, _as_rows(x))[2], np.asarray(y, dtype=np.float64))


def _gradient(params: Dict[str, np.ndarray], x: np.ndarray, y: np.ndarray) -> Dict[str, np.ndarray]:
    pre, hidden, z = _logits(params, x)
    dz = (expit(z) - y) / x.shape[0]
    dhidden = np.outer(dz, params['w2']) * (pre > 0)
    return {
        'W1': dhidden.T @ x,
        'b1': dhidden.sum(axis=0),
        'w2': hidden.T @ dz,
        'b2': np.array([dz.sum()]),
    }


def mlp_gradient(model: MlpModel, x, y) -> Dict[str, np.ndarray]:
    """
    Analytic gradient of the mean binary cross-entropy over a batch.

    Returns:
        Dict[str, np.ndarray]: Gradients keyed W1, b1, w2, b2 (b2 as a 1-element array)

    Raises:
        EmptyInputError: If the batch is empty
    """
    rows = _as_rows(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if rows.shape[0] == 0:
        raise EmptyInputError('gradient of an empty batch')
    if rows.shape[1] != model.input_dim or y.shape != (rows.shape[0],):
        raise DimensionMismatchError('batch does not match the model')
    return _gradient(model.parameters(), rows, y)


def init_model(feature_names: Sequence[str], hidden_units: int, seed: int) -> MlpModel:
    """
    Initialize a model: weights uniform in +-1/sqrt(fan_in), biases zero.
    """
    rng = np.random.default_rng(seed)
    return _init_with(rng, tuple(feature_names), hidden_units)


def _init_with(rng: np.random.Generator, feature_names: Tuple[str, ...], hidden_units: int) -> MlpModel:
    fan_in = len(feature_names)
    bound_in = 1.0 / np.sqrt(max(fan_in, 1))
    bound_hidden = 1.0 / np.sqrt(hidden_units)
    return MlpModel(
        feature_names=feature_names,
        W1=rng.uniform(-bound_in, bound_in, size=(hidden_units, fan_in)),
        b1=np.zeros(hidden_units),
        w2=rng.uniform(-bound_hidden, bound_hidden, size=hidden_units),
        b2=0.0,
    )


def mlp_train(matrix: FeatureMatrix, labels, config: TrainConfig = TrainConfig(),
              validation: Optional[Tuple[FeatureMatrix, np.ndarray]] = None,
              standardizer: Optional[Standardizer] = None) -> Tuple[MlpModel, LossTrace]:
    """
    Train a model on a feature matrix.

    Initialization and shuffling draw from one generator seeded with
    config.seed, so equal inputs give bit-identical models. With a validation
    set the parameters of the epoch with the lowest validation loss are
    returned (earliest on ties); otherwise those of the last epoch.

    Args:
        matrix: Training features
        labels: 0/1 label per row
        config: Hyperparameters
        validation: Optional (matrix, labels) used for epoch selection
        standardizer: Optional statistics applied to both sets and stored on the model

    Returns:
        Tuple[MlpModel, LossTrace]: The model and its loss history

    Raises:
        InsufficientClassError: If a class has no training sample
    """
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (matrix.n_instances,):
        raise DimensionMismatchError(f"got {y.size} labels for {matrix.n_instances} instances")
    for cls in (0, 1):
        if not np.any(y == cls):
            raise InsufficientClassError(f"training data has no instance of class {cls}")

    x = matrix.values if standardizer is None else apply_standardizer(standardizer, matrix).values
    val_x = val_y = None
    if validation is not None:
        val_matrix, val_labels = validation
        val_matrix = val_matrix.select_features(matrix.feature_names)
        val_x = val_matrix.values if standardizer is None else apply_standardizer(standardizer, val_matrix).values
        val_y = np.asarray(val_labels, dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    model = replace(_init_with(rng, matrix.feature_names, config.hidden_units), standardizer=standardizer)
    params = model.parameters()
    accum = {k: np.zeros_like(v) for k, v in params.items()}

    def losses():
        train_loss = _loss_from_logits(_logits(params, x)[2], y)
        val_loss = None if val_x is None else _loss_from_logits(_logits(params, val_x)[2], val_y)
        return train_loss, val_loss

    trace = LossTrace()
    train_loss, val_loss = losses()
    trace.train.append(train_loss)
    best = {k: v.copy() for k, v in params.items()}
    if val_loss is not None:
        trace.validation.append(val_loss)
    best_loss = val_loss

    n = x.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            grads = _gradient(params, x[batch], y[batch])
            for key in PARAMETERS:
                g = grads[key]
                if config.optimizer == 'adagrad':
                    accum[key] += g * g
                    params[key] -= config.learning_rate * g / (np.sqrt(accum[key]) + ADAGRAD_EPSILON)
                else:
                    params[key] -= config.learning_rate * g
        train_loss, val_loss = losses()
        trace.train.append(train_loss)
        logger.debug(f"epoch {epoch}: train loss {train_loss:.6f}"
                     + ('' if val_loss is None else f", validation loss {val_loss:.6f}"))
        if val_loss is not None:
            trace.validation.append(val_loss)
            if val_loss < best_loss:
                best_loss = val_loss
                best = {k: v.copy() for k, v in params.items()}
                trace.best_epoch = epoch
        else:
            best = params
            trace.best_epoch = epoch

    return model.with_parameters(best), trace


def predict_proba(model: MlpModel, matrix: FeatureMatrix) -> np.ndarray:
    """Positive-class probability per matrix row, using the model's own columns and standardizer."""
    subset = matrix.select_features(model.feature_names)
    values = subset.values if model.standardizer is None else model.standardizer.transform(subset.values)
    return mlp_forward(model, values.reshape(matrix.n_instances, model.input_dim))


def _fmt(values) -> str:
    return ' '.join(format(float(v), '.17g') for v in np.ravel(values))


def save_model(model: MlpModel, path: Union[str, Path], provenance: Optional[str] = None) -> None:
    """
    Write a model in the versioned text format.

    Layout: a magic/version line, then one ``key values...`` line each for
    input_dim, hidden, features, standardized, mean, std, W1 (row-major), b1, w2, b2.
    """
    std = model.standardizer
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"input_dim {model.input_dim}",
        f"hidden {model.hidden}",
        ' '.join(['features', *model.feature_names]),
        f"standardized {int(std is not None)}",
        f"mean {_fmt(std.mean) if std is not None else ''}".rstrip(),
        f"std {_fmt(std.std) if std is not None else ''}".rstrip(),
        f"W1 {_fmt(model.W1)}".rstrip(),
        f"b1 {_fmt(model.b1)}",
        f"w2 {_fmt(model.w2)}",
        f"b2 {_fmt([model.b2])}",
    ]
    with open(Path(path), 'w', encoding='utf-8') as f:
        if provenance:
            f.write(provenance)
        f.write('\n'.join(lines) + '\n')


def load_model(path: Union[str, Path]) -> MlpModel:
    """
    Read a model written by save_model.

    Raises:
        MissingFileError: If the file does not exist
        ModelFormatError: On an unknown version or a malformed layout
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"model file not found: {path}")
    lines = [line for line in path.read_text(encoding='utf-8').splitlines()
             if line.strip() and not line.startswith('#')]
    if not lines or lines[0].split() != [MODEL_MAGIC, str(MODEL_VERSION)]:
        raise ModelFormatError(f"{path}: not a version {MODEL_VERSION} {MODEL_MAGIC} file")
    fields = {}
    for line in lines[1:]:
        key, *tokens = line.split()
        fields[key] = tokens
    try:
        dim = int(fields['input_dim'][0])
        hidden = int(fields['hidden'][0])
        names = tuple(fields['features'])

        def floats(key, size):
            values = np.array([float(t) for t in fields[key]], dtype=np.float64)
            if values.size != size:
                raise ModelFormatError(f"{path}: {key} has {values.size} values, expected {size}")
            return values

        standardizer = None
        if fields['standardized'][0] == '1':
            standardizer = Standardizer(names, floats('mean', dim), floats('std', dim))
        model = MlpModel(
            feature_names=names,
            W1=floats('W1', hidden * dim).reshape(hidden, dim),
            b1=floats('b1', hidden),
            w2=floats('w2', hidden),
            b2=float(floats('b2', 1)[0]),
            standardizer=standardizer,
        )
    except (KeyError, IndexError, ValueError) as e:
        raise ModelFormatError(f"{path}: malformed model file ({e})") from e
    if len(names) != dim:
        raise ModelFormatError(f"{path}: {len(names)} feature names for input_dim {dim}")
    return model
