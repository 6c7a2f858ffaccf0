"""Accuracy, confusion matrices and coverage-accuracy trade-off."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptyInputError, LengthMismatchError
from ..fusion import calibrate_threshold


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are ground truth, columns predictions, both in ``classes`` order.

    ``percent`` is row-normalised to 100; rows without any ground-truth
    sample are all zero and flagged in ``empty_rows``.
    """

    classes: tuple
    counts: np.ndarray
    percent: np.ndarray
    empty_rows: tuple

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        n = self.n
        return float(np.trace(self.counts) / n) if n else float("nan")

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "counts": self.counts.astype(int).tolist(),
            "percent": self.percent.tolist(),
            "empty_rows": list(self.empty_rows),
        }


def confusion_matrix(predictions, truths, classes) -> ConfusionMatrix:
    predictions = list(predictions)
    truths = list(truths)
    if len(predictions) != len(truths):
        raise LengthMismatchError(f"{len(predictions)} predictions for {len(truths)} ground-truth labels")
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, t in zip(predictions, truths):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not one of {classes}") from None
    rows = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        percent = np.where(rows[:, None] > 0, 100.0 * counts / np.maximum(rows, 1)[:, None], 0.0)
    empty = tuple(c for c, r in zip(classes, rows) if r == 0)
    return ConfusionMatrix(classes, counts, percent, empty)


@dataclass(frozen=True)
class CoverageRow:
    coverage: float
    """Requested fraction of samples to classify."""
    threshold: float | None
    """``None`` when rows pooled from several thresholds."""
    n_classified: int
    n_rejected: int
    correct_classified: int
    correct_rejected: int

    @property
    def realized_coverage(self) -> float:
        return self.n_classified / (self.n_classified + self.n_rejected)

    @property
    def accuracy_classified(self):
        return self.correct_classified / self.n_classified if self.n_classified else None

    @property
    def accuracy_rejected(self):
        return self.correct_rejected / self.n_rejected if self.n_rejected else None

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "threshold": self.threshold,
            "realized_coverage": self.realized_coverage,
            "n_classified": self.n_classified,
            "n_rejected": self.n_rejected,
            "correct_classified": self.correct_classified,
            "correct_rejected": self.correct_rejected,
            "accuracy_classified": self.accuracy_classified,
            "accuracy_rejected": self.accuracy_rejected,
        }

    def __iter__(self):
        # unpacks as (coverage, threshold, accuracy_classified, accuracy_rejected)
        return iter((self.coverage, self.threshold, self.accuracy_classified, self.accuracy_rejected))


def split_at(max_confidences, correct, threshold: float, coverage: float) -> CoverageRow:
    conf = np.asarray(max_confidences, dtype=np.float64)
    ok = np.asarray(correct, dtype=bool)
    keep = conf >= threshold
    return CoverageRow(
        coverage=float(coverage),
        threshold=float(threshold),
        n_classified=int(keep.sum()),
        n_rejected=int((~keep).sum()),
        correct_classified=int(ok[keep].sum()),
        correct_rejected=int(ok[~keep].sum()),
    )


def coverage_accuracy(max_confidences, correct, coverages) -> list[CoverageRow]:
    """Accuracy on both sides of the threshold that keeps each requested coverage.

    The threshold for each coverage is calibrated on ``max_confidences``
    themselves.  Rows unpack as ``(coverage, threshold, accuracy_classified,
    accuracy_rejected)``; an empty side reports ``None``.
    """
    conf = np.asarray(max_confidences, dtype=np.float64)
    ok = np.asarray(correct, dtype=bool)
    if conf.size == 0:
        raise EmptyInputError("coverage analysis needs at least one result")
    if conf.shape != ok.shape:
        raise LengthMismatchError("confidences and correctness flags differ in length")
    return [split_at(conf, ok, calibrate_threshold(conf, c), c) for c in coverages]
