"""Semi-supervised k-NN anomaly scoring with percentile thresholding.

Every sub-call gets the sum of Euclidean distances to its k nearest
training rows in the embedded space; the decision threshold is the
95th percentile of the training scores and classification is strictly
greater-than, so a constant-score training set flags nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import backend, knn_sum_distances

__all__ = ["Threshold", "knn_scores", "fit_threshold", "classify", "backend"]

DEFAULT_K = 35
DEFAULT_PERCENTILE = 95.0


@dataclass(frozen=True)
class Threshold:
    value: float
    percentile: float = DEFAULT_PERCENTILE


def knn_scores(train_emb, query_emb, k: int = DEFAULT_K, exclude_self: bool = False) -> np.ndarray:
    """Anomaly score per query row; see kernels.knn_sum_distances."""
    return knn_sum_distances(train_emb, query_emb, k, exclude_self=exclude_self)


def fit_threshold(train_scores, percentile: float = DEFAULT_PERCENTILE) -> Threshold:
    """Nearest-rank percentile of the training scores."""
    scores = np.sort(np.asarray(train_scores, dtype=np.float64))
    if scores.size == 0:
        raise ValueError("cannot fit a threshold on empty scores")
    rank = math.ceil(percentile / 100.0 * scores.size)
    rank = min(max(rank, 1), scores.size)
    return Threshold(value=float(scores[rank - 1]), percentile=percentile)


def classify(scores, threshold: Threshold) -> np.ndarray:
    """Anomalous iff score strictly exceeds the threshold."""
    return np.asarray(scores, dtype=np.float64) > threshold.value
