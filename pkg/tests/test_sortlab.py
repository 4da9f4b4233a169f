import numpy as np
import pytest

from visionary.errors import InvalidInputError
from visionary import sortlab as sl


def rand_keys(rng, n, hi=2**32):
    return rng.integers(0, hi, size=n, dtype=np.uint64).astype(np.uint32)


class TestGlobalSort:
    def test_orders_keys(self):
        rng = np.random.default_rng(0)
        keys = rand_keys(rng, 4096)
        perm = sl.GlobalSort().order(keys)
        assert np.all(np.diff(keys[perm].astype(np.int64)) >= 0)
        assert sl.count_inversions(perm, keys) == 0


class TestLazySort:
    def test_period_one_is_global(self):
        rng = np.random.default_rng(1)
        lazy = sl.LazySort(1)
        for _ in range(5):
            keys = rand_keys(rng, 500)
            np.testing.assert_array_equal(lazy.order(keys),
                                          sl.GlobalSort().order(keys))

    def test_static_keys_stay_sorted(self):
        rng = np.random.default_rng(2)
        keys = rand_keys(rng, 1000)
        lazy = sl.LazySort(10)
        for _ in range(10):
            assert sl.count_inversions(lazy.order(keys), keys) == 0

    def test_stale_frames_reuse_permutation(self):
        rng = np.random.default_rng(3)
        lazy = sl.LazySort(4)
        first = lazy.order(rand_keys(rng, 300))
        for _ in range(3):
            np.testing.assert_array_equal(lazy.order(rand_keys(rng, 300)), first)
        # Frame 4 re-sorts against the new keys.
        keys = rand_keys(rng, 300)
        assert sl.count_inversions(lazy.order(keys), keys) == 0

    def test_changing_keys_leave_inversions_between_sorts(self):
        rng = np.random.default_rng(4)
        lazy = sl.LazySort(10)
        keys = rand_keys(rng, 2000)
        lazy.order(keys)
        shuffled = keys[rng.permutation(len(keys))]
        perm = lazy.order(shuffled)
        assert sl.count_inversions(perm, shuffled) > 0

    def test_population_shrink_filters(self):
        rng = np.random.default_rng(5)
        lazy = sl.LazySort(10)
        lazy.order(rand_keys(rng, 100))
        perm = lazy.order(rand_keys(rng, 60))
        assert sorted(perm.tolist()) == list(range(60))

    def test_population_growth_appends_back(self):
        rng = np.random.default_rng(6)
        lazy = sl.LazySort(10)
        first = lazy.order(rand_keys(rng, 50))
        perm = lazy.order(rand_keys(rng, 70))
        np.testing.assert_array_equal(perm[:50], first)
        np.testing.assert_array_equal(np.sort(perm[50:]), np.arange(50, 70))

    def test_reset(self):
        rng = np.random.default_rng(7)
        lazy = sl.LazySort(5)
        lazy.order(rand_keys(rng, 40))
        lazy.reset()
        keys = rand_keys(rng, 40)
        assert sl.count_inversions(lazy.order(keys), keys) == 0

    def test_bad_period(self):
        with pytest.raises(InvalidInputError):
            sl.LazySort(0)


class TestLocalSort:
    def test_single_partition_is_global(self):
        rng = np.random.default_rng(8)
        keys = rand_keys(rng, 777)
        np.testing.assert_array_equal(sl.LocalSort(1000).order(keys),
                                      sl.GlobalSort().order(keys))

    def test_blocks_internally_sorted(self):
        rng = np.random.default_rng(9)
        keys = rand_keys(rng, 1000)
        perm = sl.LocalSort(64).order(keys)
        for start in range(0, 1000, 64):
            block = keys[perm[start:start + 64]]
            assert np.all(np.diff(block.astype(np.int64)) >= 0)

    def test_reversed_keys_keep_cross_block_inversions(self):
        keys = np.arange(1000, dtype=np.uint32)[::-1].copy()
        perm = sl.LocalSort(100).order(keys)
        # Each block is sorted, but every cross-block pair stays inverted.
        assert sl.count_inversions(perm, keys) == 100 * 100 * (10 * 9 // 2)

    def test_partition_larger_population_indices_valid(self):
        keys = np.array([3, 1], dtype=np.uint32)
        np.testing.assert_array_equal(sl.LocalSort(8).order(keys), [1, 0])


class TestCountInversions:
    def brute(self, perm, keys):
        seq = keys[perm]
        n = len(seq)
        return sum(1 for i in range(n) for j in range(i + 1, n)
                   if seq[i] > seq[j])

    def test_identity_on_sorted(self):
        keys = np.arange(10, dtype=np.uint32)
        assert sl.count_inversions(np.arange(10), keys) == 0

    def test_reversed_distinct(self):
        keys = np.arange(50, dtype=np.uint32)
        assert sl.count_inversions(np.arange(50)[::-1], keys) == 50 * 49 // 2

    def test_ties_are_not_inversions(self):
        keys = np.array([5, 5, 5, 5], dtype=np.uint32)
        assert sl.count_inversions(np.array([3, 1, 0, 2]), keys) == 0

    def test_matches_quadratic_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            n = int(rng.integers(1, 300))
            keys = rand_keys(rng, n, hi=40)     # many duplicates
            perm = rng.permutation(n)
            assert sl.count_inversions(perm, keys) == self.brute(perm, keys)

    def test_rejects_non_permutation(self):
        keys = np.arange(4, dtype=np.uint32)
        with pytest.raises(InvalidInputError):
            sl.count_inversions(np.array([0, 0, 1, 2]), keys)
        with pytest.raises(InvalidInputError):
            sl.count_inversions(np.array([0, 1]), keys)


class TestParseStrategy:
    def test_tokens(self):
        assert isinstance(sl.parse_strategy("global"), sl.GlobalSort)
        lazy = sl.parse_strategy("lazy:10")
        assert isinstance(lazy, sl.LazySort) and lazy.period == 10
        local = sl.parse_strategy("local:4096")
        assert isinstance(local, sl.LocalSort) and local.partition_size == 4096

    def test_bad_tokens(self):
        for token in ("lazy:x", "quick", "local:", "lazy:-2"):
            with pytest.raises(InvalidInputError):
                sl.parse_strategy(token)
