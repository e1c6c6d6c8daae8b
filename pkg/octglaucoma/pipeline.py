"""
Experiment Pipeline Module

This module runs the complete evaluation protocol on a dataset.

Protocol:
1. Patient-grouped train/test split (split_seed)
2. k stratified patient folds of the training set (fold_seed)
3. Per fold: feature selection, standardization and MLP training on the
   fold's training patients only, evaluation on the held-out fold
4. Mean and sample standard deviation of SN/SPC/FS/ACC/AUC over the folds
5. Selection and model refitted on the entire training set, evaluated once
   on the test set

Modes:
- hdl: hand-crafted descriptors only
- hybrid: hand-crafted descriptors and embedding columns concatenated
  before selection
- deep: embedding columns only

Within every fit a patient-level share of the training patients
(validation_fraction) is held out to pick the best training epoch; selection
and standardization statistics come from the remaining patients.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classifier import LossTrace, MlpModel, TrainConfig, fit_standardizer, mlp_train
from .config import ExperimentConfig
from .embeddings import EmbeddingTable, load_embeddings, standin_embedder
from .errors import MissingEmbeddingsError, TooFewPatientsError, UsageError
from .extraction import extract_all
from .metrics import METRIC_NAMES, EvalReport, evaluate
from .models import Dataset, FeatureMatrix
from .partition import FoldPlan, SplitPlan, make_folds, patient_split, split_patients
from .selection import SelectionReport, select_features

logger = logging.getLogger(__name__)


class ExperimentMode(str, Enum):
    HDL = 'hdl'
    HYBRID = 'hybrid'
    DEEP = 'deep'


@dataclass(frozen=True)
class Cohort:
    """
    Patient structure of a dataset without its images.

    Attributes:
        scans_of (Dict[str, Tuple[str, ...]]): Patient id -> scan ids in dataset order
        patient_labels (Dict[str, int]): Patient id -> label
    """
    scans_of: Dict[str, Tuple[str, ...]]
    patient_labels: Dict[str, int]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> 'Cohort':
        scans: Dict[str, List[str]] = {}
        for record in dataset:
            scans.setdefault(record.patient_id, []).append(record.scan_id)
        return cls({p: tuple(ids) for p, ids in scans.items()}, dataset.patient_labels())

    def scan_ids(self, patients: Sequence[str]) -> Tuple[str, ...]:
        return tuple(sid for p in sorted(patients) for sid in self.scans_of[p])

    def scan_labels(self, patients: Sequence[str]) -> np.ndarray:
        return np.array([self.patient_labels[p] for p in sorted(patients) for _ in self.scans_of[p]],
                        dtype=np.int64)

    def labels_of(self, patients: Sequence[str]) -> Dict[str, int]:
        return {p: self.patient_labels[p] for p in patients}


@dataclass
class FitResult:
    """Selection report, trained model and loss trace of one fit."""
    selection: SelectionReport
    model: MlpModel
    trace: LossTrace
    fit_patients: Tuple[str, ...]
    validation_patients: Tuple[str, ...]


@dataclass
class FoldResult:
    """
    Outcome of one cross-validation fold.

    Attributes:
        fold (int): Fold index
        n_train_scans, n_eval_scans (int): Scans used to fit and to evaluate
        selected (Tuple[str, ...]): Features kept by the fold's selection
        report (EvalReport): Metrics on the held-out fold
        best_epoch (int): Epoch returned by training
    """
    fold: int
    n_train_scans: int
    n_eval_scans: int
    selected: Tuple[str, ...]
    report: EvalReport
    best_epoch: int


@dataclass
class CvSummary:
    """Mean and sample standard deviation (ddof=1) of each metric over the folds."""
    mean: Dict[str, Optional[float]] = field(default_factory=dict)
    std: Dict[str, Optional[float]] = field(default_factory=dict)
    folds_with_auc: int = 0


@dataclass
class ExperimentResult:
    """
    Everything one experiment produces.

    Attributes:
        mode (ExperimentMode): Protocol that ran
        config (ExperimentConfig): Configuration used
        split (SplitPlan): Train/test patients
        folds (FoldPlan): Fold assignment of the training patients
        fold_results (List[FoldResult]): Per-fold outcomes, sorted by fold
        cv (CvSummary): Aggregated fold metrics
        selection (SelectionReport): Final selection on the entire training set
        model (MlpModel): Final model
        test_report (EvalReport): Final model on the test set
        features (FeatureMatrix): Input matrix of the protocol
    """
    mode: ExperimentMode
    config: ExperimentConfig
    split: SplitPlan
    folds: FoldPlan
    fold_results: List[FoldResult]
    cv: CvSummary
    selection: SelectionReport
    model: MlpModel
    test_report: EvalReport
    features: FeatureMatrix


def derive_seed(base: int, index: int) -> int:
    """Independent child seed for fit number ``index``."""
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def fit_on_patients(matrix: FeatureMatrix, cohort: Cohort, patients: Sequence[str],
                    config: ExperimentConfig, seed: int) -> FitResult:
    """
    Select features, standardize and train on the given patients only.

    A validation_fraction share of the patients (per class) is held out to
    pick the best epoch; when a class is too small for that, training runs
    without validation.
    """
    fit_patients: Tuple[str, ...] = tuple(sorted(patients))
    validation_patients: Tuple[str, ...] = ()
    if config.validation_fraction > 0:
        try:
            fit_patients, validation_patients = split_patients(
                cohort.labels_of(patients), 1.0 - config.validation_fraction, seed
            )
        except TooFewPatientsError as e:
            logger.warning(f"Training without a validation split: {e}")

    fit_matrix = matrix.select_instances(cohort.scan_ids(fit_patients))
    fit_labels = cohort.scan_labels(fit_patients)
    selected, selection = select_features(fit_matrix, fit_labels, config.alpha, config.redundancy_r)
    if selected.n_features == 0:
        logger.warning('No feature passed selection; the model can only learn the class prior')
    standardizer = fit_standardizer(selected)

    validation = None
    if validation_patients:
        validation = (matrix.select_instances(cohort.scan_ids(validation_patients)),
                      cohort.scan_labels(validation_patients))
    train_config = TrainConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        hidden_units=config.hidden_units,
        optimizer=config.optimizer,
        seed=seed,
    )
    model, trace = mlp_train(selected, fit_labels, train_config, validation, standardizer)
    return FitResult(selection, model, trace, fit_patients, validation_patients)


def run_fold(matrix: FeatureMatrix, cohort: Cohort, folds: FoldPlan, fold: int,
             config: ExperimentConfig) -> FoldResult:
    """Fit on the other folds and evaluate on fold ``fold``."""
    train_patients, held_out = folds.fold(fold)
    fit = fit_on_patients(matrix, cohort, train_patients, config, derive_seed(config.train_seed, fold))
    eval_matrix = matrix.select_instances(cohort.scan_ids(held_out))
    report = evaluate(fit.model, eval_matrix, cohort.scan_labels(held_out), config.threshold, strict=False)
    if report.auc is None:
        logger.warning(f"Fold {fold}: single-class validation set, AUC skipped")
    logger.info(f"Fold {fold}: " + ', '.join(
        f"{k}={'NA' if v is None else format(v, '.4f')}" for k, v in report.metrics().items()))
    return FoldResult(
        fold=fold,
        n_train_scans=len(cohort.scan_ids(train_patients)),
        n_eval_scans=eval_matrix.n_instances,
        selected=tuple(fit.selection.selected_names),
        report=report,
        best_epoch=fit.trace.best_epoch,
    )


def _run_fold_task(args) -> FoldResult:
    return run_fold(*args)


def summarize_folds(fold_results: Sequence[FoldResult]) -> CvSummary:
    """Aggregate fold metrics; AUC is averaged over the folds where it is defined."""
    summary = CvSummary()
    for name in METRIC_NAMES:
        values = [r.report.metrics()[name] for r in fold_results if r.report.metrics()[name] is not None]
        if not values:
            summary.mean[name] = summary.std[name] = None
            continue
        summary.mean[name] = float(np.mean(values))
        summary.std[name] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    summary.folds_with_auc = sum(r.report.auc is not None for r in fold_results)
    return summary


def resolve_embeddings(dataset: Dataset, config: ExperimentConfig,
                       embeddings: Optional[EmbeddingTable] = None) -> EmbeddingTable:
    """
    Return the embedding source of a hybrid or deep run.

    Precedence: an explicit table, then the stand-in embedder, then the
    configured embedding file.

    Raises:
        MissingEmbeddingsError: If no source is available
    """
    if embeddings is not None:
        return embeddings
    if config.standin_embedder:
        return standin_embedder(dataset, config.embed_seed, config.embedding_dim)
    if config.embedding_path:
        return load_embeddings(config.embedding_path, config.embedding_dim)
    raise MissingEmbeddingsError(
        'hybrid and deep modes need embeddings: set embedding_path or enable the stand-in embedder'
    )


def build_matrix(dataset: Dataset, mode: ExperimentMode, config: ExperimentConfig,
                 features: Optional[FeatureMatrix] = None,
                 embeddings: Optional[EmbeddingTable] = None,
                 workers: int = 1) -> FeatureMatrix:
    """Assemble the input matrix of a protocol, rows in dataset order."""
    ids = tuple(dataset.scan_ids)
    # embedding source first, so a missing one fails before extraction
    deep = None if mode == ExperimentMode.HDL else resolve_embeddings(dataset, config, embeddings).to_matrix(ids)
    hand = None
    if mode in (ExperimentMode.HDL, ExperimentMode.HYBRID):
        hand = features.select_instances(ids) if features is not None else extract_all(dataset, config, workers)
    if mode == ExperimentMode.HDL:
        return hand
    if mode == ExperimentMode.DEEP:
        return deep
    return hand.hstack(deep)


def run_experiment(dataset: Dataset, mode='hdl', config: ExperimentConfig = ExperimentConfig(),
                   features: Optional[FeatureMatrix] = None,
                   embeddings: Optional[EmbeddingTable] = None,
                   workers: int = 1) -> ExperimentResult:
    """
    Run one protocol end to end.

    Args:
        dataset: Labelled dataset
        mode: 'hdl', 'hybrid' or 'deep'
        config: Experiment configuration
        features: Precomputed hand-crafted matrix (extracted when omitted)
        embeddings: Embedding table for hybrid/deep (resolved from config when omitted)
        workers: Processes for extraction and for the folds

    Returns:
        ExperimentResult: Fold, CV and test outcomes with the final model

    Raises:
        UsageError: On an unknown mode
        MissingEmbeddingsError: If hybrid/deep has no embedding source
    """
    try:
        mode = ExperimentMode(mode)
    except ValueError as e:
        raise UsageError(f"unknown mode {mode!r}; expected one of hdl, hybrid, deep") from e

    matrix = build_matrix(dataset, mode, config, features, embeddings, workers)
    cohort = Cohort.from_dataset(dataset)
    split = patient_split(dataset, config.train_ratio, config.split_seed)
    folds = make_folds(cohort.labels_of(split.train_patients), config.k_folds, config.fold_seed)

    tasks = [(matrix, cohort, folds, fold, config) for fold in range(config.k_folds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, config.k_folds)) as pool:
            fold_results = list(pool.map(_run_fold_task, tasks))
    else:
        fold_results = [_run_fold_task(t) for t in tasks]
    fold_results.sort(key=lambda r: r.fold)
    cv = summarize_folds(fold_results)
    logger.info('CV: ' + ', '.join(
        f"{k}={'NA' if cv.mean[k] is None else format(cv.mean[k], '.4f')}" for k in METRIC_NAMES))

    final = fit_on_patients(matrix, cohort, split.train_patients, config,
                            derive_seed(config.train_seed, config.k_folds))
    test_report = evaluate(final.model, matrix.select_instances(cohort.scan_ids(split.test_patients)),
                           cohort.scan_labels(split.test_patients), config.threshold, strict=False)
    logger.info(f"Test ({mode.value}): " + ', '.join(
        f"{k}={'NA' if v is None else format(v, '.4f')}" for k, v in test_report.metrics().items()))

    return ExperimentResult(
        mode=mode,
        config=config,
        split=split,
        folds=folds,
        fold_results=fold_results,
        cv=cv,
        selection=final.selection,
        model=final.model,
        test_report=test_report,
        features=matrix,
    )
