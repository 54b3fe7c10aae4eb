"""Sliding-window sub-calls and N-gram count features.

Calls of variable length become fixed-vocabulary count vectors: each
call is cut into overlapping sub-calls (window m, step n), and each
sub-call is represented by its 2-gram counts over a vocabulary frozen
from the union of pairs seen in the fold's training and testing data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdtlog import Call, MdtRecord


@dataclass(frozen=True)
class SubCall:
    """A consecutive slice of one call; the unit of anomaly classification."""

    ue: int
    call_index: int
    offset: int
    records: tuple[MdtRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def events(self) -> tuple[int, ...]:
        return tuple(int(r.event) for r in self.records)


def sliding_window(call: Call, call_index: int = 0, m: int = 15, n: int = 10) -> list[SubCall]:
    """Cut a call into sub-calls of length <= m starting every n events.

    Offsets run 0, n, 2n, ... while they fall inside the call; a window
    that exactly fits the tail (offset + m == length) ends the scan.
    Windows shorter than 2 events cannot form a 2-gram and are dropped.
    """
    if m < 2:
        raise ValueError("window size m must be >= 2")
    if not 1 <= n <= m:
        raise ValueError("step n must satisfy 1 <= n <= m")
    length = len(call)
    windows = []
    offset = 0
    while offset < length:
        end = min(offset + m, length)
        if end - offset >= 2:
            windows.append(
                SubCall(
                    ue=call.ue,
                    call_index=call_index,
                    offset=offset,
                    records=call.records[offset:end],
                )
            )
        if offset + m == length:
            break
        offset += n
    return windows


def windows_for_calls(calls, m: int = 15, n: int = 10) -> list[SubCall]:
    out = []
    for idx, call in enumerate(calls):
        out.extend(sliding_window(call, call_index=idx, m=m, n=n))
    return out


def ngram_counts(sequence, n: int = 2) -> dict[tuple, int]:
    """Count all overlapping length-n sub-sequences of a sequence."""
    if n < 1:
        raise ValueError("n must be >= 1")
    items = tuple(sequence)
    counts: dict[tuple, int] = {}
    for i in range(len(items) - n + 1):
        key = items[i : i + n]
        counts[key] = counts.get(key, 0) + 1
    return counts


@dataclass(frozen=True)
class NGramVocabulary:
    """Ordered set of n-gram keys defining the feature columns."""

    pairs: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.pairs)})

    def __len__(self) -> int:
        return len(self.pairs)

    def column(self, pair) -> int:
        return self._index[pair]

    @classmethod
    def from_subcalls(cls, *groups, n: int = 2) -> "NGramVocabulary":
        """Union of n-grams over all groups, sorted by event codes."""
        seen = set()
        for group in groups:
            for sub in group:
                seen.update(ngram_counts(sub.events(), n=n))
        return cls(pairs=tuple(sorted(seen)))


@dataclass(frozen=True)
class FeatureMatrix:
    """Sub-calls x n-gram count matrix over a frozen vocabulary."""

    sub_calls: tuple[SubCall, ...]
    vocabulary: NGramVocabulary
    counts: np.ndarray  # (rows, columns) int64

    @property
    def shape(self):
        return self.counts.shape


def build_feature_matrix(sub_calls, vocabulary: NGramVocabulary, n: int = 2) -> FeatureMatrix:
    matrix = np.zeros((len(sub_calls), len(vocabulary)), dtype=np.int64)
    for row, sub in enumerate(sub_calls):
        for pair, count in ngram_counts(sub.events(), n=n).items():
            matrix[row, vocabulary.column(pair)] = count
    return FeatureMatrix(sub_calls=tuple(sub_calls), vocabulary=vocabulary, counts=matrix)


def write_matrix_csv(matrix: FeatureMatrix, path, event_names=None) -> None:
    """Debug dump with "EVENT1|EVENT2" column headers."""
    from .mdtlog import EventId

    def name(code):
        return EventId(code).name if event_names is None else event_names[code]

    headers = ["|".join(name(c) for c in pair) for pair in matrix.vocabulary.pairs]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["ue", "call_index", "offset"] + headers) + "\n")
        for sub, row in zip(matrix.sub_calls, matrix.counts):
            prefix = [str(sub.ue), str(sub.call_index), str(sub.offset)]
            fh.write(",".join(prefix + [str(int(v)) for v in row]) + "\n")
