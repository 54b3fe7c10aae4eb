"""Numpy fallback for the k-NN scoring kernel.

Arithmetic is kept bit-identical to the compiled kernel: the squared
distance accumulates one dimension at a time (sequential adds) and the
k smallest distances are summed with cumsum (sequential, ascending).
Queries are processed in blocks to bound the distance-matrix memory.
"""

from __future__ import annotations

import numpy as np

_BLOCK_ROWS = 512


def knn_sum_distances(train, query, k, exclude_self):
    n_train = train.shape[0]
    n_query = query.shape[0]
    dim = train.shape[1]
    out = np.empty(n_query, dtype=np.float64)
    for start in range(0, n_query, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n_query)
        block = query[start:stop]
        d2 = np.zeros((stop - start, n_train), dtype=np.float64)
        for j in range(dim):
            diff = block[:, j, None] - train[None, :, j]
            d2 += diff * diff
        if exclude_self:
            d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        smallest = np.partition(d2, k - 1, axis=1)[:, :k]
        smallest.sort(axis=1)
        out[start:stop] = np.cumsum(np.sqrt(smallest), axis=1)[:, -1]
    return out
