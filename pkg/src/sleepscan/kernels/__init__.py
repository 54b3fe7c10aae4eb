"""k-NN scoring kernels: compiled core with a numpy fallback.

The backend is selected once at import time.  Set SLEEPSCAN_PURE_PYTHON=1
to force the numpy implementation (used by the benchmark and tests).
Both backends produce bit-identical scores: squared differences are
accumulated dimension by dimension and the k smallest distances are
summed in ascending order.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("SLEEPSCAN_PURE_PYTHON", "") not in ("", "0"):
    from . import _knn_py as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _knn_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _knn_py as _impl  # type: ignore[no-redef]

        BACKEND = "numpy"


def backend() -> str:
    """Name of the active implementation ("cython" or "numpy")."""
    return BACKEND


def knn_sum_distances(train, query, k: int, exclude_self: bool = False) -> np.ndarray:
    """Sum of Euclidean distances to the k nearest training rows, per query row.

    With exclude_self=True, query must be the training matrix itself
    (row-aligned); the zero self-distance of row i is skipped.
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if train.ndim != 2 or query.ndim != 2:
        raise ValueError("train and query must be 2-D")
    if train.shape[1] != query.shape[1]:
        raise ValueError(
            f"dimension mismatch: train has {train.shape[1]} columns, "
            f"query has {query.shape[1]}"
        )
    if exclude_self and query.shape[0] != train.shape[0]:
        raise ValueError("exclude_self requires query to be the training set itself")
    k = int(k)
    available = train.shape[0] - 1 if exclude_self else train.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > available:
        raise ValueError(f"k={k} exceeds available neighbors ({available})")
    return _impl.knn_sum_distances(train, query, k, bool(exclude_self))
