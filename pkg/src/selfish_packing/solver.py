"""Exact subset-sum over size classes and exact minimum-bin packing.

Both searches work on count vectors over the distinct sizes of the input
rather than on individual items: the adversarial families have a handful of
sizes with large multiplicities, which per-item search cannot handle.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from .core import Instance, Item, Packing, ceil_fraction

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class SizeClassPool:
    """Items grouped by size; ``sizes`` strictly increasing, ids ascending per class."""

    sizes: tuple[Fraction, ...]
    ids: tuple[tuple[int, ...], ...]

    @classmethod
    def from_items(cls, items: Iterable[Item]) -> "SizeClassPool":
        groups: dict[Fraction, list[int]] = {}
        for item in items:
            groups.setdefault(item.size, []).append(item.id)
        sizes = tuple(sorted(groups))
        return cls(sizes, tuple(tuple(sorted(groups[s])) for s in sizes))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.ids)

    def __len__(self) -> int:
        return sum(self.counts)

    def total(self) -> Fraction:
        return sum((s * c for s, c in zip(self.sizes, self.counts)), ZERO)

    def without(self, removed: Iterable[int]) -> "SizeClassPool":
        gone = set(removed)
        sizes, ids = [], []
        for s, g in zip(self.sizes, self.ids):
            kept = tuple(i for i in g if i not in gone)
            if kept:
                sizes.append(s)
                ids.append(kept)
        return SizeClassPool(tuple(sizes), tuple(ids))


@dataclass(frozen=True)
class SubsetResult:
    ids: tuple[int, ...]
    total: Fraction


def _enumerate_half(sizes: Sequence[int], counts: Sequence[int], cap: int):
    """All count vectors with sum <= cap, lexicographically descending."""
    k = len(sizes)
    out: list[tuple[int, tuple[int, ...]]] = []
    pick = [0] * k

    def rec(idx: int, total: int) -> None:
        if idx == k:
            out.append((total, tuple(pick)))
            return
        size = sizes[idx]
        for c in range(min(counts[idx], (cap - total) // size), -1, -1):
            pick[idx] = c
            rec(idx + 1, total + size * c)
        pick[idx] = 0

    rec(0, 0)
    return out


def _canonical_counts(sizes: Sequence[int], counts: Sequence[int], cap: int) -> tuple[list[int], int]:
    """Optimal total and the lexicographically greatest optimal count vector.

    Meet in the middle on integer-scaled sizes: the larger-size half is
    enumerated in lex-descending order and matched against a table holding
    the first (lex-greatest) vector per reachable sum of the other half.
    """
    if sum(s * c for s, c in zip(sizes, counts)) <= cap:
        return list(counts), sum(s * c for s, c in zip(sizes, counts))
    split = (len(sizes) + 1) // 2
    left = _enumerate_half(sizes[:split], counts[:split], cap)
    right = _enumerate_half(sizes[split:], counts[split:], cap)
    first_vec: dict[int, tuple[int, ...]] = {}
    for total, vec in right:
        first_vec.setdefault(total, vec)
    right_sums = sorted(first_vec)

    best = 0
    for a, _ in left:
        j = bisect_right(right_sums, cap - a) - 1
        if a + right_sums[j] > best:
            best = a + right_sums[j]
            if best == cap:
                break
    for a, vec in left:
        tail = first_vec.get(best - a)
        if tail is not None:
            return list(vec) + list(tail), best
    raise AssertionError("subset-sum reconstruction failed")  # pragma: no cover


def max_subset(pool: SizeClassPool, capacity: Fraction = ONE) -> SubsetResult:
    """Maximum-total sub-multiset of ``pool`` fitting in ``capacity``.

    Among maximizers the count vector (largest size first) is the
    lexicographically greatest; ids are taken smallest first within a class.
    """
    capacity = Fraction(capacity)
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    if not pool.sizes:
        return SubsetResult((), ZERO)
    desc = list(range(len(pool.sizes) - 1, -1, -1))
    scale = lcm(capacity.denominator, *(s.denominator for s in pool.sizes))
    counts, total = _canonical_counts(
        [int(pool.sizes[k] * scale) for k in desc],
        [len(pool.ids[k]) for k in desc],
        int(capacity * scale),
    )
    chosen: list[int] = []
    for k, c in zip(desc, counts):
        chosen.extend(pool.ids[k][:c])
    return SubsetResult(tuple(chosen), Fraction(total, scale))


def size_lower_bound(instance: Instance) -> int:
    return ceil_fraction(instance.total_size())


def first_fit(instance: Instance, order: Sequence[int] | None = None) -> Packing:
    """Each item goes to the lowest-indexed bin where it fits, in input order."""
    ids = [item.id for item in instance.items] if order is None else list(order)
    size = instance.size_of
    bins: list[list[int]] = []
    loads: list[Fraction] = []
    for i in ids:
        s = size(i)
        for k, load in enumerate(loads):
            if load + s <= 1:
                bins[k].append(i)
                loads[k] = load + s
                break
        else:
            bins.append([i])
            loads.append(s)
    return Packing.from_bins(instance, bins)


def first_fit_decreasing(instance: Instance) -> Packing:
    order = sorted(instance.items, key=lambda it: (-it.size, it.id))
    return first_fit(instance, [it.id for it in order])


class OptBudgetExceeded(RuntimeError):
    """The branch-and-bound ran out of nodes before proving optimality."""

    def __init__(self, best: Packing, lower_bound: int, nodes: int):
        super().__init__(
            f"node budget exhausted after {nodes} nodes: best {len(best)} bins, "
            f"lower bound {lower_bound}"
        )
        self.best = best
        self.lower_bound = lower_bound
        self.nodes = nodes


def _lower_bound(sizes: Sequence[int], counts: Sequence[int], cap: int) -> int:
    total = sum(s * c for s, c in zip(sizes, counts))
    big = sum(c for s, c in zip(sizes, counts) if 2 * s > cap)
    return max(-(-total // cap), big)


class _BinCompletion:
    """Bin-completion search over count vectors (classes largest first, integer sizes)."""

    def __init__(self, sizes: list[int], cap: int, budget: int, root_lb: int):
        self.sizes = sizes
        self.cap = cap
        self.budget = budget
        self.root_lb = root_lb
        self.nodes = 0
        self.best_bins: list[list[int]] = []
        self.best_count = 0
        self.seen: dict[tuple[int, ...], int] = {}

    def completions(self, counts: list[int], room: int) -> list[tuple[int, list[int]]]:
        """Maximal feasible sub-vectors of ``counts`` fitting in ``room``, fullest first."""
        out: list[tuple[int, list[int]]] = []
        sizes = self.sizes
        k = len(sizes)
        pick = [0] * k

        def rec(idx: int, rem: int) -> None:
            if idx == k:
                for j in range(k):
                    if counts[j] > pick[j] and sizes[j] <= rem:
                        return
                out.append((room - rem, list(pick)))
                return
            for c in range(min(counts[idx], rem // sizes[idx]), -1, -1):
                pick[idx] = c
                rec(idx + 1, rem - sizes[idx] * c)
            pick[idx] = 0

        rec(0, room)
        out.sort(key=lambda e: e[0], reverse=True)
        return out

    def search(self, counts: list[int], bins: list[list[int]]) -> bool:
        """Return True once a packing meeting the root lower bound is found."""
        self.nodes += 1
        if self.nodes > self.budget:
            raise _OutOfNodes
        if not any(counts):
            if len(bins) < self.best_count:
                self.best_bins = [list(b) for b in bins]
                self.best_count = len(bins)
            return len(bins) <= self.root_lb
        if len(bins) + _lower_bound(self.sizes, counts, self.cap) >= self.best_count:
            return False
        key = tuple(counts)
        if self.seen.get(key, self.best_count) <= len(bins):
            return False
        self.seen[key] = len(bins)
        first = next(j for j, c in enumerate(counts) if c)
        counts[first] -= 1
        try:
            for _, pick in self.completions(counts, self.cap - self.sizes[first]):
                rest = [c - p for c, p in zip(counts, pick)]
                pick[first] += 1
                bins.append(pick)
                done = self.search(rest, bins)
                bins.pop()
                if done:
                    return True
        finally:
            counts[first] += 1
        return False


class _OutOfNodes(Exception):
    pass


def _realize(instance: Instance, pool: SizeClassPool, desc: list[int], bins: list[list[int]]) -> Packing:
    cursor = [0] * len(desc)
    out = []
    for vec in bins:
        members: list[int] = []
        for j, c in enumerate(vec):
            g = pool.ids[desc[j]]
            members.extend(g[cursor[j] : cursor[j] + c])
            cursor[j] += c
        out.append(sorted(members))
    return Packing.from_bins(instance, out)


def _count_vectors(packing: Packing, pool: SizeClassPool, desc: list[int]) -> list[list[int]]:
    pos = {s: j for j, s in enumerate(pool.sizes[k] for k in desc)}
    size = packing.instance.size_of
    vecs = []
    for b in packing.bins:
        v = [0] * len(desc)
        for i in b:
            v[pos[size(i)]] += 1
        vecs.append(v)
    return vecs


def opt_pack(instance: Instance, budget: int = 200_000) -> Packing:
    """Minimum-bin packing, certified by exhaustive bin-completion search.

    Raises :class:`OptBudgetExceeded` (carrying the best packing found and the
    lower bound) when more than ``budget`` search nodes would be needed.
    """
    pool = SizeClassPool.from_items(instance.items)
    if not pool.sizes:
        return Packing(instance, ())
    desc = list(range(len(pool.sizes) - 1, -1, -1))
    scale = lcm(*(s.denominator for s in pool.sizes))
    sizes = [int(pool.sizes[k] * scale) for k in desc]
    counts = [len(pool.ids[k]) for k in desc]
    lb = _lower_bound(sizes, counts, scale)
    ffd = _count_vectors(first_fit_decreasing(instance), pool, desc)
    if len(ffd) == lb:
        return _realize(instance, pool, desc, ffd)
    engine = _BinCompletion(sizes, scale, budget, lb)
    engine.best_bins, engine.best_count = ffd, len(ffd)
    try:
        engine.search(counts, [])
    except _OutOfNodes:
        best = _realize(instance, pool, desc, engine.best_bins)
        raise OptBudgetExceeded(best, lb, engine.nodes) from None
    return _realize(instance, pool, desc, engine.best_bins)


def exhaustive_max_subset_total(sizes: Sequence[Fraction], capacity: Fraction = ONE) -> Fraction:
    """Brute force over all 2^n subsets; test oracle for :func:`max_subset`."""
    best = ZERO
    n = len(sizes)
    for mask in range(1 << n):
        total = sum((sizes[i] for i in range(n) if mask >> i & 1), ZERO)
        if best < total <= capacity:
            best = total
    return best


def exhaustive_min_bins(sizes: Sequence[Fraction]) -> int:
    """Minimum bin count by trying every assignment (restricted growth strings)."""
    n = len(sizes)
    if n == 0:
        return 0
    order = sorted(sizes, reverse=True)
    best = n
    loads: list[Fraction] = []

    def rec(i: int) -> None:
        nonlocal best
        if len(loads) >= best:
            return
        if i == n:
            best = len(loads)
            return
        s = order[i]
        for k in range(len(loads)):
            if loads[k] + s <= 1:
                loads[k] += s
                rec(i + 1)
                loads[k] -= s
        loads.append(s)
        rec(i + 1)
        loads.pop()

    rec(0)
    return best


__all__ = [
    "SizeClassPool",
    "SubsetResult",
    "max_subset",
    "size_lower_bound",
    "first_fit",
    "first_fit_decreasing",
    "opt_pack",
    "OptBudgetExceeded",
    "exhaustive_max_subset_total",
    "exhaustive_min_bins",
]
