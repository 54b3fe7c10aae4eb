"""Method comparison: confusion metrics, ROC curves, ideal-point distance.

Confusion counts are cell-level decisions across runs; the ROC sweeps
the sub-call anomaly score against per-sub-call ground truth; the
heuristic point is (spread of the non-argmax scores, maximum score)
measured against the ideal (0, 100) for a faulty scenario and
(0, 100/N) for a clean one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .localize import SleepingCellHistogram


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def count_confusion(labels_per_run, truth_per_run) -> ConfusionCounts:
    """Pool cell-level decisions over runs; truth is the faulty-cell set per run."""
    if len(labels_per_run) != len(truth_per_run):
        raise DataError("one truth set per labeled run required")
    tp = fp = tn = fn = 0
    for labels, truth in zip(labels_per_run, truth_per_run):
        for cell, flagged in zip(labels.cell_ids, labels.abnormal):
            faulty = cell in truth
            if flagged and faulty:
                tp += 1
            elif flagged and not faulty:
                fp += 1
            elif not flagged and faulty:
                fn += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def confusion_metrics(counts: ConfusionCounts) -> dict[str, float]:
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / counts.total if counts.total else 0.0
    tnr = tn / (tn + fp) if tn + fp else 1.0
    fpr = fp / (fp + tn) if fp + tn else 0.0
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f_score": f_score,
        "tnr": tnr,
        "fpr": fpr,
        "tp": tp,
        "fp": fp,
        "tn": tn,
        "fn": fn,
    }


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc(scores, positive) -> RocCurve:
    """Threshold sweep over distinct score values, AUC by trapezoid rule."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = positive[order]
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(~sorted_pos)
    distinct = np.nonzero(np.diff(sorted_scores))[0]
    boundary = np.concatenate([distinct, [len(sorted_scores) - 1]])
    tpr = np.concatenate([[0.0], tp[boundary] / n_pos])
    fpr = np.concatenate([[0.0], fp[boundary] / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, auc=auc)


def heuristic_point(h: SleepingCellHistogram) -> tuple[float, float]:
    """(spread of all scores excluding the argmax cell, maximum score)."""
    scores = np.asarray(h.scores, dtype=np.float64)
    top = int(np.argmax(scores))
    rest = np.delete(scores, top)
    spread = float(rest.std(ddof=1)) if len(rest) > 1 else 0.0
    return spread, float(scores[top])


def heuristic_distance(h: SleepingCellHistogram, scenario: str, n_cells: int) -> float:
    """Euclidean distance to the scenario's ideal point."""
    x, y = heuristic_point(h)
    if scenario == "faulty":
        ideal = (0.0, 100.0)
    elif scenario == "clean":
        ideal = (0.0, 100.0 / n_cells)
    else:
        raise DataError(f"unknown scenario {scenario!r}")
    return float(np.hypot(x - ideal[0], y - ideal[1]))
