"""Error metrics and split protocols.

MAE is the mean absolute prediction error in years. The cumulative score at
error level l is the percentage of test images whose absolute error is no
higher than l years (inclusive comparison); curves tabulate it at integer
levels 0..L_max. Splits are a seeded shuffled holdout (first
ceil(fraction * N) ids train) and leave-one-person-out, where every person's
images form the test fold exactly once and the reported score is the MAE
over the pooled test predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .rng import shuffled

DEFAULT_CS_MAX_LEVEL = 15


@dataclass(frozen=True)
class LabeledPrediction:
    id: str
    y_true: float
    y_pred: float

    def __post_init__(self):
        if not (math.isfinite(self.y_true) and math.isfinite(self.y_pred)):
            raise ValueError("predictions must be finite")


def mae(preds: Sequence[LabeledPrediction]) -> float:
    if not preds:
        raise ValueError("no predictions")
    return float(np.mean([abs(p.y_pred - p.y_true) for p in preds]))


def cumulative_score(preds: Sequence[LabeledPrediction], level: float) -> float:
    if not preds:
        raise ValueError("no predictions")
    if level < 0:
        raise ValueError("level must be nonnegative")
    hits = sum(1 for p in preds if abs(p.y_pred - p.y_true) <= level)
    return 100.0 * hits / len(preds)


@dataclass
class CsCurve:
    levels: np.ndarray  # integer years 0..l_max
    values: np.ndarray  # percentages


def cs_curve(preds: Sequence[LabeledPrediction], l_max: int = DEFAULT_CS_MAX_LEVEL) -> CsCurve:
    levels = np.arange(l_max + 1)
    values = np.array([cumulative_score(preds, int(l)) for l in levels])
    return CsCurve(levels, values)


@dataclass
class SplitPlan:
    train_ids: list[str]
    test_ids: list[str]


@dataclass
class LopoFold:
    person: str
    train_ids: list[str]
    test_ids: list[str]


def random_split(ids: Sequence[str], fraction: float, seed: int) -> SplitPlan:
    """Seeded shuffle; the first ceil(fraction * N) ids become the train
    side. 1046 ids at fraction 0.5 give the 523/523 halves."""
    ids = list(ids)
    if len(ids) < 2:
        raise ValueError("need at least 2 ids to split")
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    order = shuffled(ids, seed)
    n_train = math.ceil(fraction * len(ids))
    return SplitPlan(order[:n_train], order[n_train:])


def lopo_splits(person_by_id: Mapping[str, str]) -> list[LopoFold]:
    """One (train, test) fold per person, ordered by person id; each fold
    partitions the full id set."""
    persons: dict[str, list[str]] = {}
    for id_, person in person_by_id.items():
        persons.setdefault(person, []).append(id_)
    if len(persons) < 2:
        raise ValueError("leave-one-person-out needs at least 2 persons")
    all_ids = list(person_by_id)
    folds = []
    for person in sorted(persons):
        test = persons[person]
        test_set = set(test)
        train = [i for i in all_ids if i not in test_set]
        folds.append(LopoFold(person, train, test))
    return folds
