"""Confusion matrix, per-category precision/recall, accuracy and the chance flag."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from cattle_clip.errors import DataError

# 1/6 rounded to two places: a category "fails to exceed" chance at or below this
RANDOM_CHANCE_THRESHOLD = 0.17


def confusion_matrix(true_labels: Sequence[int], predicted_labels: Sequence[int], C: int) -> np.ndarray:
    """C x C counts, rows = true category, columns = predicted category"""
    true_labels = np.asarray(true_labels, dtype=np.int64).reshape(-1)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64).reshape(-1)
    if true_labels.shape != predicted_labels.shape:
        raise DataError(f"{len(true_labels)} true labels but {len(predicted_labels)} predictions")
    for name, labels in (("true", true_labels), ("predicted", predicted_labels)):
        bad = labels[(labels < 0) | (labels >= C)]
        if bad.size:
            raise DataError(f"{name} label {int(bad[0])} outside [0, {C})")
    if true_labels.size == 0:
        return np.zeros((C, C), dtype=np.int64)
    return sk_confusion_matrix(true_labels, predicted_labels, labels=list(range(C))).astype(np.int64)


def precision_recall(confusion: np.ndarray) -> Tuple[List[Optional[float]], List[Optional[float]]]:
    """
    Per-category precision (diagonal / column sum) and recall (diagonal /
    row sum). A zero denominator yields None.
    """
    confusion = np.asarray(confusion)
    diagonal = np.diag(confusion)
    predicted = confusion.sum(axis=0)
    support = confusion.sum(axis=1)
    precision = [float(d / p) if p else None for d, p in zip(diagonal, predicted)]
    recall = [float(d / s) if s else None for d, s in zip(diagonal, support)]
    return precision, recall


def overall_accuracy(confusion: np.ndarray) -> float:
    confusion = np.asarray(confusion)
    total = confusion.sum()
    if confusion.size == 0 or total == 0:
        raise DataError("accuracy of an empty confusion matrix is undefined")
    return float(np.trace(confusion) / total)


@dataclass
class MetricsReport:
    confusion: np.ndarray
    category_order: Tuple[str, ...]
    overall_accuracy: float
    precision: List[Optional[float]]
    recall: List[Optional[float]]
    support: List[int]
    suboptimal_flag: bool = False
    threshold: float = RANDOM_CHANCE_THRESHOLD
    provenance: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(np.asarray(self.confusion).sum())

    def recall_of(self, category: str) -> Optional[float]:
        return self.recall[self.category_order.index(category)]

    def mean_recall(self, categories: Sequence[str]) -> float:
        values = [self.recall_of(c) for c in categories]
        values = [v for v in values if v is not None]
        return float(np.mean(values)) if values else float("nan")


def flag_suboptimal(report: MetricsReport, threshold: float = RANDOM_CHANCE_THRESHOLD) -> bool:
    """True iff a supported category's precision or recall does not exceed the threshold"""
    for precision, recall, support in zip(report.precision, report.recall, report.support):
        if not support:
            continue
        if any(value is not None and value <= threshold for value in (precision, recall)):
            return True
    return False


def build_report(
    true_labels: Sequence[int],
    predicted_labels: Sequence[int],
    category_order: Sequence[str],
    threshold: float = RANDOM_CHANCE_THRESHOLD,
) -> MetricsReport:
    category_order = tuple(category_order)
    confusion = confusion_matrix(true_labels, predicted_labels, len(category_order))
    precision, recall = precision_recall(confusion)
    report = MetricsReport(
        confusion=confusion,
        category_order=category_order,
        overall_accuracy=overall_accuracy(confusion),
        precision=precision,
        recall=recall,
        support=[int(s) for s in confusion.sum(axis=1)],
        threshold=threshold,
    )
    report.suboptimal_flag = flag_suboptimal(report, threshold)
    return report
