# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled k-NN scoring loop: sum of the k smallest Euclidean distances.

Selection keeps a max-heap of the k smallest squared distances, so each
query row costs O(n_train + k log k) with no libc comparator overhead.
Arithmetic order matches the numpy fallback exactly (sequential
accumulation over dimensions, ascending sum over the k neighbors), so
both backends return bit-identical scores.
"""

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

import numpy as np


cdef inline void _sift_down(double* heap, Py_ssize_t size, Py_ssize_t root) noexcept nogil:
    cdef Py_ssize_t child
    cdef double tmp
    while True:
        child = 2 * root + 1
        if child >= size:
            return
        if child + 1 < size and heap[child + 1] > heap[child]:
            child += 1
        if heap[child] <= heap[root]:
            return
        tmp = heap[root]
        heap[root] = heap[child]
        heap[child] = tmp
        root = child


cdef inline void _insertion_sort(double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


def knn_sum_distances(double[:, ::1] train, double[:, ::1] query,
                      Py_ssize_t k, bint exclude_self):
    cdef Py_ssize_t n_train = train.shape[0]
    cdef Py_ssize_t dim = train.shape[1]
    cdef Py_ssize_t n_query = query.shape[0]
    out_arr = np.empty(n_query, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* heap = <double*> malloc(k * sizeof(double))
    if heap == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, r, j, filled
    cdef double acc, diff, total
    try:
        with nogil:
            for i in range(n_query):
                filled = 0
                for r in range(n_train):
                    if exclude_self and r == i:
                        continue
                    acc = 0.0
                    for j in range(dim):
                        diff = query[i, j] - train[r, j]
                        acc = acc + diff * diff
                    if filled < k:
                        heap[filled] = acc
                        filled += 1
                        if filled == k:
                            # heapify once full
                            for j in range(k // 2 - 1, -1, -1):
                                _sift_down(heap, k, j)
                    elif acc < heap[0]:
                        heap[0] = acc
                        _sift_down(heap, k, 0)
                _insertion_sort(heap, filled)
                total = 0.0
                for r in range(filled):
                    total = total + sqrt(heap[r])
                out[i] = total
    finally:
        free(heap)
    return out_arr
