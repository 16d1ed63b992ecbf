import itertools
from fractions import Fraction as F

import pytest
from conftest import instances_st, sizes_st
from hypothesis import given
from hypothesis import strategies as st

from selfish_packing.core import Instance, validate_packing
from selfish_packing.generators import gen_graham
from selfish_packing.solver import (
    OptBudgetExceeded,
    SizeClassPool,
    exhaustive_max_subset_total,
    exhaustive_min_bins,
    first_fit,
    first_fit_decreasing,
    max_subset,
    opt_pack,
    size_lower_bound,
)


def oracle_best_subset(sizes, cap=F(1)):
    """Best total and the set of count vectors (largest size first) reaching it."""
    best, vecs = F(0), []
    distinct = sorted(set(sizes), reverse=True)
    for mask in itertools.product((0, 1), repeat=len(sizes)):
        total = sum((s for s, m in zip(sizes, mask) if m), F(0))
        if total > cap:
            continue
        vec = tuple(sum(1 for s, m in zip(sizes, mask) if m and s == d) for d in distinct)
        if total > best:
            best, vecs = total, [vec]
        elif total == best:
            vecs.append(vec)
    return best, vecs


def oracle_min_bins(sizes):
    """Minimum bins by trying all set partitions (restricted growth strings)."""
    n = len(sizes)
    best = n
    for labels in itertools.product(range(n), repeat=n):
        if any(labels[i] > max(labels[:i], default=-1) + 1 for i in range(n)):
            continue
        loads = {}
        for s, b in zip(sizes, labels):
            loads[b] = loads.get(b, F(0)) + s
        if all(x <= 1 for x in loads.values()):
            best = min(best, len(loads))
    return best


def pool_of(sizes):
    return SizeClassPool.from_items(Instance.from_sizes(sizes).items)


class TestMaxSubset:
    def test_halves(self):
        r = max_subset(pool_of([F(1, 2)] * 3))
        assert r.total == 1 and len(r.ids) == 2

    def test_graham_pool(self):
        sizes = [F(33, 64)] * 3 + [F(17, 64)] * 3 + [F(13, 64)] * 3
        best, vecs = oracle_best_subset(sizes)
        r = max_subset(pool_of(sizes))
        assert r.total == best == 1
        chosen = sorted(sizes[i] for i in r.ids)
        assert chosen == [F(13, 64)] + [F(17, 64)] * 3
        # canonical: lex-greatest count vector among maximizers
        vec = tuple(chosen.count(d) for d in (F(33, 64), F(17, 64), F(13, 64)))
        assert vec == max(vecs)

    def test_exact_fit(self):
        sizes = [F(3, 5), F(2, 5), F(2, 5)]
        r = max_subset(pool_of(sizes))
        assert r.total == 1
        assert sorted(sizes[i] for i in r.ids) == [F(2, 5), F(3, 5)]

    def test_empty_pool(self):
        assert max_subset(SizeClassPool((), ())).total == 0

    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            max_subset(pool_of([F(1, 2)]), F(0))

    def test_ids_smallest_first(self):
        r = max_subset(pool_of([F(1, 3)] * 5))
        assert r.ids == (0, 1, 2)

    @given(sizes_st(max_n=12, max_den=30), st.sampled_from([F(1), F(1, 2), F(5, 7)]))
    def test_matches_oracle(self, sizes, cap):
        best, vecs = oracle_best_subset(sizes, cap)
        r = max_subset(pool_of(sizes), cap)
        assert r.total == best
        assert sum(sizes[i] for i in r.ids) == r.total <= cap
        distinct = sorted(set(sizes), reverse=True)
        vec = tuple(sum(1 for i in r.ids if sizes[i] == d) for d in distinct)
        assert vec == max(vecs)
        assert r.total == exhaustive_max_subset_total(sizes, cap)

    @given(sizes_st(min_n=2, max_n=12, max_den=30), st.data())
    def test_monotone(self, sizes, data):
        pool = pool_of(sizes)
        drop = data.draw(st.sets(st.integers(0, len(sizes) - 1), max_size=len(sizes) - 1))
        assert max_subset(pool.without(drop)).total <= max_subset(pool).total

    def test_deterministic(self):
        sizes = [F(k, 37) for k in range(1, 20)]
        assert max_subset(pool_of(sizes)) == max_subset(pool_of(list(sizes)))


class TestOpt:
    @pytest.mark.parametrize(
        "sizes, bins",
        [([F(1, 2)] * 4, 2), ([F(2, 3), F(2, 3), F(1, 3), F(1, 3)], 2)],
    )
    def test_small(self, sizes, bins):
        p = opt_pack(Instance.from_sizes(sizes))
        assert len(p) == bins == oracle_min_bins(sizes)
        assert validate_packing(p) == []

    def test_graham_chains(self):
        p = opt_pack(gen_graham(3, 3))
        assert len(p) == 3
        for load in p.loads():
            assert load == F(63, 64)

    def test_empty(self):
        assert len(opt_pack(Instance.from_sizes([]))) == 0

    def test_budget(self):
        # FFD misses the size bound here, so the search has to run
        sizes = [F(x, 100) for x in (44, 21, 31, 19, 24, 19, 39, 18, 34, 40)]
        with pytest.raises(OptBudgetExceeded) as info:
            opt_pack(Instance.from_sizes(sizes), budget=3)
        exc = info.value
        assert validate_packing(exc.best) == []
        assert exc.lower_bound <= len(exc.best)

    @given(instances_st(max_n=7, max_den=20))
    def test_matches_oracle(self, inst):
        p = opt_pack(inst)
        assert validate_packing(p) == []
        assert len(p) == oracle_min_bins(list(inst.sizes))
        assert len(p) >= size_lower_bound(inst)

    @given(instances_st(max_n=10, max_den=30))
    def test_matches_packaged_exhaustive(self, inst):
        assert len(opt_pack(inst)) == exhaustive_min_bins(list(inst.sizes))

    def test_deterministic(self):
        inst = Instance.from_sizes([F(k, 41) for k in range(5, 25)])
        assert opt_pack(inst) == opt_pack(inst)


class TestLowerBoundAndFits:
    @pytest.mark.parametrize(
        "sizes, lb", [([F(1, 2)] * 3, 2), ([], 0), ([F(1, 3)] * 7, 3)]
    )
    def test_size_lower_bound(self, sizes, lb):
        assert size_lower_bound(Instance.from_sizes(sizes)) == lb

    def test_first_fit_orders(self):
        a = Instance.from_sizes([F(1, 2), F(1, 2), F(1, 3), F(1, 3), F(1, 3)])
        assert first_fit(a).bins == ((0, 1), (2, 3, 4))
        b = Instance.from_sizes([F(1, 3), F(1, 2), F(1, 2), F(1, 3), F(1, 3)])
        assert len(first_fit(b)) == 3
        assert first_fit(b).bins == ((0, 1), (2, 3), (4,))
        assert len(first_fit_decreasing(b)) == 2
