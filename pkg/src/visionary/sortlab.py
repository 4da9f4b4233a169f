"""Alternative splat ordering strategies and ordering-quality metrics.

Global per-frame sorting is the correct baseline. Lazy sorting amortizes
full sorts over a window of frames and reuses the stale permutation in
between; local sorting orders fixed-size partitions independently. Both
cheaper strategies can leave depth inversions, which count_inversions
quantifies.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .pipeline import radix_sort


class SortStrategy:
    """order(keys) -> permutation; reset() clears any retained state."""

    def order(self, keys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reset(self) -> None:
        pass


class GlobalSort(SortStrategy):
    """Full stable radix sort every frame."""

    def order(self, keys: np.ndarray) -> np.ndarray:
        return radix_sort(keys)


class LazySort(SortStrategy):
    """Full sort every `period` frames; stale permutation in between.

    Between full sorts the previous permutation is filtered to the current
    population; indices it does not cover are appended unsorted at the
    back.
    """

    def __init__(self, period: int):
        if period < 1:
            raise InvalidInputError("lazy period must be >= 1")
        self.period = int(period)
        self._frame = 0
        self._stale: np.ndarray | None = None

    def reset(self) -> None:
        self._frame = 0
        self._stale = None

    def order(self, keys: np.ndarray) -> np.ndarray:
        perm = lazy_sort_step(self, keys)
        self._frame += 1
        return perm


def lazy_sort_step(state: LazySort, keys: np.ndarray) -> np.ndarray:
    """One lazy-sort step against the retained state (see LazySort)."""
    n = len(keys)
    if state._stale is None or state._frame % state.period == 0:
        state._stale = radix_sort(keys)
        return state._stale
    stale = state._stale
    kept = stale[stale < n]
    if len(kept) < n:
        missing = np.setdiff1d(np.arange(n, dtype=stale.dtype), kept,
                               assume_unique=True)
        kept = np.concatenate([kept, missing])
    state._stale = kept
    return kept


class LocalSort(SortStrategy):
    """Independent radix sort inside fixed-size partitions."""

    def __init__(self, partition_size: int):
        if partition_size < 1:
            raise InvalidInputError("partition size must be >= 1")
        self.partition_size = int(partition_size)

    def order(self, keys: np.ndarray) -> np.ndarray:
        return local_sort(keys, self.partition_size)


def local_sort(keys: np.ndarray, partition_size: int) -> np.ndarray:
    """Sort each partition_size-aligned block independently, keep block order."""
    if partition_size < 1:
        raise InvalidInputError("partition size must be >= 1")
    n = len(keys)
    parts = []
    for start in range(0, n, partition_size):
        block = keys[start:start + partition_size]
        parts.append(start + radix_sort(block))
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


def count_inversions(permutation: np.ndarray, keys: np.ndarray) -> int:
    """Number of pairs (i<j) with key[perm[i]] > key[perm[j]].

    Merge-count in O(n log n): recursively split, then count cross
    inversions of each sorted half via binary search.
    """
    perm = np.asarray(permutation)
    keys = np.asarray(keys)
    n = len(keys)
    if len(perm) != n or (n and (perm.min() < 0 or perm.max() >= n
                                 or len(np.unique(perm)) != n)):
        raise InvalidInputError("not a permutation of the key indices")
    seq = keys[perm].astype(np.uint64)

    def rec(a: np.ndarray):
        if len(a) <= 1:
            return 0, a
        mid = len(a) // 2
        inv_l, left = rec(a[:mid])
        inv_r, right = rec(a[mid:])
        # Elements of `right` smaller than each left element are inversions.
        cross = int(np.searchsorted(right, left, side="left").sum())
        return inv_l + inv_r + cross, np.sort(np.concatenate([left, right]),
                                              kind="stable")

    total, _ = rec(seq)
    return total


def parse_strategy(token: str) -> SortStrategy:
    """Strategy tokens: global | lazy:<period> | local:<partition_size>."""
    if token == "global":
        return GlobalSort()
    for prefix, cls in (("lazy:", LazySort), ("local:", LocalSort)):
        if token.startswith(prefix):
            try:
                return cls(int(token[len(prefix):]))
            except ValueError:
                raise InvalidInputError(f"bad strategy token {token!r}")
    raise InvalidInputError(f"unknown strategy token {token!r}")
