"""
Patient-Grouped Partitioning Module

All scans of a patient always fall on the same side of a split and in the
same cross-validation fold, so no patient identity leaks between training
and evaluation data.

Features:
- Seeded, class-stratified train/test split of patients with an exact
  per-class ratio (round-half-up, at least one patient on each side)
- Seeded, class-stratified k-fold assignment of training patients
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .errors import TooFewPatientsError
from .models import Dataset, LABEL_NAMES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitPlan:
    """
    Disjoint train/test patient sets.

    Attributes:
        train_patients (Tuple[str, ...]): Sorted training patient ids
        test_patients (Tuple[str, ...]): Sorted test patient ids
        seed (int): Seed the split was drawn with
        ratio (float): Target training fraction per class
    """
    train_patients: Tuple[str, ...]
    test_patients: Tuple[str, ...]
    seed: int
    ratio: float

    def train_dataset(self, dataset: Dataset) -> Dataset:
        return dataset.subset(self.train_patients)

    def test_dataset(self, dataset: Dataset) -> Dataset:
        return dataset.subset(self.test_patients)


@dataclass(frozen=True)
class FoldPlan:
    """
    Assignment of training patients to k folds.

    Attributes:
        k (int): Number of folds
        seed (int): Seed the assignment was drawn with
        assignment (Dict[str, int]): Patient id -> fold index in [0, k)
    """
    k: int
    seed: int
    assignment: Dict[str, int] = field(default_factory=dict)

    def fold_patients(self, fold: int) -> Tuple[str, ...]:
        return tuple(sorted(p for p, f in self.assignment.items() if f == fold))

    def fold(self, fold: int) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        """(training patients, held-out patients) of one fold."""
        held_out = self.fold_patients(fold)
        train = tuple(sorted(p for p, f in self.assignment.items() if f != fold))
        return train, held_out


def _by_class(patient_labels: Mapping[str, int]) -> Dict[int, List[str]]:
    groups: Dict[int, List[str]] = {0: [], 1: []}
    for patient, label in patient_labels.items():
        groups[int(label)].append(patient)
    return {label: sorted(ids) for label, ids in groups.items()}


def split_patients(patient_labels: Mapping[str, int], ratio: float,
                   seed: int) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """
    Split patients per class into a first part of round(ratio * n) patients
    and the remainder.

    Within each class the sorted patient ids are permuted by one generator
    seeded with ``seed`` (class 0 first), so the result depends only on the
    patient set, the ratio and the seed.

    Raises:
        TooFewPatientsError: If a class has fewer than 2 patients
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError('ratio must lie strictly between 0 and 1')
    rng = np.random.default_rng(seed)
    first: List[str] = []
    second: List[str] = []
    for label, ids in _by_class(patient_labels).items():
        n = len(ids)
        if n < 2:
            raise TooFewPatientsError(
                f"class {LABEL_NAMES[label]} has {n} patient(s); a split needs at least 2"
            )
        n_first = min(max(int(math.floor(ratio * n + 0.5)), 1), n - 1)
        order = rng.permutation(n)
        first.extend(ids[i] for i in order[:n_first])
        second.extend(ids[i] for i in order[n_first:])
    return tuple(sorted(first)), tuple(sorted(second))


def patient_split(dataset: Dataset, ratio: float = 0.8, seed: int = 0) -> SplitPlan:
    """
    Draw the train/test patient split of a dataset.

    Example:
        >>> # 100 + 100 patients, ratio 0.8
        >>> plan = patient_split(dataset, 0.8, seed=0)
        >>> len(plan.train_patients), len(plan.test_patients)
        (160, 40)
    """
    train, test = split_patients(dataset.patient_labels(), ratio, seed)
    logger.info(f"Split {len(train)} training and {len(test)} test patients (ratio {ratio:g}, seed {seed})")
    return SplitPlan(train_patients=train, test_patients=test, seed=seed, ratio=ratio)


def make_folds(patient_labels: Mapping[str, int], k: int = 5, seed: int = 1) -> FoldPlan:
    """
    Assign patients to k stratified folds.

    Per class, fold sizes differ by at most one patient.

    Args:
        patient_labels: Patient id -> label of the training patients
        k: Number of folds (>= 2)
        seed: Shuffling seed

    Raises:
        TooFewPatientsError: If a class has fewer than k patients
    """
    if k < 2:
        raise ValueError('k must be at least 2')
    for label, ids in _by_class(patient_labels).items():
        if len(ids) < k:
            raise TooFewPatientsError(
                f"class {LABEL_NAMES[label]} has {len(ids)} patient(s), fewer than k={k} folds"
            )
    patients = sorted(patient_labels)
    labels = np.array([int(patient_labels[p]) for p in patients])
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    assignment: Dict[str, int] = {}
    for fold, (_, held_out) in enumerate(splitter.split(np.zeros((len(patients), 1)), labels)):
        for index in held_out:
            assignment[patients[index]] = fold
    return FoldPlan(k=k, seed=seed, assignment=assignment)
