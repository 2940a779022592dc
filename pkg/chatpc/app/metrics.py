#!/usr/bin/env python3
"""Confusion counts and the classification metrics derived from them"""

from dataclasses import dataclass
from typing import Dict, Optional

from .labels import CiLabel


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    if denominator == 0:
        return None
    return numerator / denominator


@dataclass(frozen=True)
class MetricsReport:
    """Counts for one run; accuracy/precision/recall/f1 derive from them.

    UNDECIDED predictions are kept out of tp/fp/tn/fn. Those whose label is
    the positive class are also counted in undecided_positive and lower
    recall.
    """

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    undecided: int = 0
    undecided_positive: int = 0
    positive_class: CiLabel = CiLabel.INDEPENDENT

    @property
    def decided(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> Optional[float]:
        return _ratio(self.tp + self.tn, self.decided)

    @property
    def precision(self) -> Optional[float]:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> Optional[float]:
        return _ratio(self.tp, self.tp + self.fn + self.undecided_positive)

    @property
    def f1(self) -> Optional[float]:
        precision, recall = self.precision, self.recall
        if precision is None or recall is None:
            return None
        if precision + recall == 0:
            return 0.0
        return 2 * precision * recall / (precision + recall)

    def to_dict(self) -> Dict[str, object]:
        return {
            "positive_class": self.positive_class.value,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "undecided": self.undecided,
            "undecided_positive": self.undecided_positive,
        }
