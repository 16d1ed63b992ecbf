"""The bin packing game: SS/FF/FFD packings, improving steps and equilibrium checks."""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator, NamedTuple, Union

from .core import Instance, Packing, format_fraction, sorted_load_vector
from .solver import SizeClassPool, first_fit, first_fit_decreasing, max_subset

__all__ = [
    "SSRecord",
    "SSTrace",
    "ss_pack",
    "first_fit",
    "first_fit_decreasing",
    "ImprovingMove",
    "improving_moves",
    "find_improving_move",
    "is_nash",
    "apply_move",
    "best_response_dynamics",
    "CoalitionDeviation",
    "StrongNashCheck",
    "is_strong_nash_direct",
    "is_strong_nash_via_ss",
    "POLICIES",
]

NEW_BIN = "new"
Target = Union[int, str]


@dataclass(frozen=True)
class SSRecord:
    items: tuple[int, ...]
    load: Fraction
    s_min: Fraction


@dataclass(frozen=True)
class SSTrace:
    records: tuple[SSRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def step_of(self) -> dict[int, int]:
        """Map item id -> index of the SS bin that packed it."""
        return {i: k for k, rec in enumerate(self.records) for i in rec.items}

    def to_document(self, instance: Instance) -> dict:
        pos = instance.position
        return {
            "format_version": 1,
            "records": [
                {
                    "items": [pos(i) for i in rec.items],
                    "load": format_fraction(rec.load),
                    "s_min": format_fraction(rec.s_min),
                }
                for rec in self.records
            ],
        }


def ss_pack(instance: Instance) -> tuple[Packing, SSTrace]:
    """Subset Sum heuristic: repeatedly open a bin with a canonical max subset."""
    pool = SizeClassPool.from_items(instance.items)
    bins = []
    records = []
    while pool.sizes:
        s_min = pool.sizes[0]
        chosen = max_subset(pool, Fraction(1))
        bins.append(chosen.ids)
        records.append(SSRecord(chosen.ids, chosen.total, s_min))
        pool = pool.without(chosen.ids)
    return Packing.from_bins(instance, bins), SSTrace(tuple(records))


@dataclass(frozen=True)
class ImprovingMove:
    item: int
    source: int
    target: Target
    cost_before: Fraction
    cost_after: Fraction

    def describe(self) -> str:
        return (
            f"item {self.item}: bin {self.source} -> bin {self.target} "
            f"(cost {format_fraction(self.cost_before)} -> {format_fraction(self.cost_after)})"
        )


def improving_moves(packing: Packing) -> list[ImprovingMove]:
    """Every single-item move that strictly lowers the mover's cost.

    Ordered by item id, then by target bin index.  A move to a fresh bin never
    helps (the item would pay 1 >= its current share), so targets are always
    existing bins.
    """
    size = packing.instance.size_of
    loads = packing.loads()
    moves = []
    for src, b in enumerate(packing.bins):
        for i in b:
            s = size(i)
            for dst, load in enumerate(loads):
                if dst == src or load + s > 1 or load + s <= loads[src]:
                    continue
                moves.append(ImprovingMove(i, src, dst, s / loads[src], s / (load + s)))
    moves.sort(key=lambda m: (m.item, m.target))
    return moves


def find_improving_move(packing: Packing) -> ImprovingMove | None:
    """Fast witness search: for each item only the fullest bin it fits into matters.

    Returns the move with the smallest item id (best target for that item), or
    None when the packing is a Nash equilibrium.
    """
    size = packing.instance.size_of
    loads = packing.loads()
    order = sorted(range(len(loads)), key=lambda k: loads[k])
    sorted_loads = [loads[k] for k in order]
    found = None
    for src, b in enumerate(packing.bins):
        for i in b:
            s = size(i)
            # fullest bins with load <= 1 - s, skipping the item's own bin
            j = bisect_right(sorted_loads, 1 - s) - 1
            while j >= 0 and order[j] == src:
                j -= 1
            if j < 0:
                continue
            if sorted_loads[j] + s > loads[src]:
                move = ImprovingMove(i, src, order[j], s / loads[src], s / (sorted_loads[j] + s))
                if found is None or move.item < found.item:
                    found = move
    return found


def is_nash(packing: Packing) -> bool:
    return find_improving_move(packing) is None


def apply_move(packing: Packing, move: ImprovingMove) -> Packing:
    """Move one item; a bin left empty is deleted and later bins shift down."""
    bins = [list(b) for b in packing.bins]
    bins[move.source].remove(move.item)
    if move.target == NEW_BIN:
        bins.append([move.item])
    else:
        bins[move.target].append(move.item)
    return packing.with_bins(bins)


POLICIES = ("first", "max-gain", "seeded-random")


class DynamicsResult(NamedTuple):
    packing: Packing
    steps: int


def best_response_dynamics(
    packing: Packing,
    policy: str = "first",
    seed: int = 0,
    log: list[ImprovingMove] | None = None,
    max_steps: int = 1_000_000,
) -> DynamicsResult:
    """Apply improving moves chosen by ``policy`` until none is left.

    ``first`` takes the lowest item id / lowest target bin, ``max-gain`` the
    largest cost decrease (same tie-break), ``seeded-random`` draws uniformly
    from the improving moves with ``random.Random(seed)``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    rng = random.Random(seed)
    steps = 0
    while True:
        moves = improving_moves(packing)
        if not moves:
            return DynamicsResult(packing, steps)
        if policy == "first":
            move = moves[0]
        elif policy == "max-gain":
            move = max(moves, key=lambda m: (m.cost_before - m.cost_after, -m.item, -m.target))
        else:
            move = moves[rng.randrange(len(moves))]
        packing = apply_move(packing, move)
        steps += 1
        if log is not None:
            log.append(move)
        if steps >= max_steps:  # pragma: no cover - the potential rules this out
            raise RuntimeError("dynamics did not converge within max_steps")


@dataclass(frozen=True)
class CoalitionDeviation:
    coalition: tuple[int, ...]
    # existing bin index, or "new:<k>" for the k-th freshly opened bin
    targets: dict[int, Target] = field(hash=False)
    new_costs: dict[int, Fraction] = field(hash=False)

    def describe(self) -> str:
        parts = [
            f"{i}->{self.targets[i]} (cost {format_fraction(self.new_costs[i])})"
            for i in self.coalition
        ]
        return "coalition " + ", ".join(parts)


@dataclass(frozen=True)
class StrongNashCheck:
    """Outcome of a strong-equilibrium check.

    ``stable`` is None when the search budget ran out before a verdict.
    """

    stable: bool | None
    witness: CoalitionDeviation | None = None
    max_coalition: int = 0

    @property
    def inconclusive(self) -> bool:
        return self.stable is None

    def __bool__(self) -> bool:
        return bool(self.stable)


class _Budget(Exception):
    pass


def _joint_deviations(
    coalition: tuple[int, ...],
    packing: Packing,
    loads: list[Fraction],
    where: dict[int, int],
    counter: list[int],
    budget: int,
) -> Iterator[CoalitionDeviation]:
    """Joint moves of ``coalition`` that strictly improve every member.

    Members are evaluated on the simultaneous post-move configuration:
    they vacate their bins, non-members stay, and each member lands in an
    existing bin (possibly its own) or in a fresh bin.
    """
    size = packing.instance.size_of
    nbins = len(loads)
    members = sorted(coalition, key=lambda i: (-loads[where[i]], i))
    old = [loads[where[i]] for i in members]
    sizes = [size(i) for i in members]
    resident = list(loads)
    for i in members:
        resident[where[i]] -= size(i)
    suffix = [Fraction(0)] * (len(members) + 1)
    for k in range(len(members) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + sizes[k]
    fill: dict[int, Fraction] = {}
    assign: list[int] = []

    def final_load(target: int) -> Fraction:
        base = resident[target] if target < nbins else Fraction(0)
        return base + fill.get(target, Fraction(0))

    def rec(k: int, fresh_used: int) -> Iterator[CoalitionDeviation]:
        counter[0] += 1
        if counter[0] > budget:
            raise _Budget
        if k == len(members):
            if all(final_load(assign[j]) > old[j] for j in range(len(members))):
                targets: dict[int, Target] = {}
                costs = {}
                for j, i in enumerate(members):
                    tgt = assign[j]
                    targets[i] = tgt if tgt < nbins else f"new:{tgt - nbins}"
                    costs[i] = sizes[j] / final_load(tgt)
                yield CoalitionDeviation(tuple(sorted(coalition)), targets, costs)
            return
        s = sizes[k]
        for tgt in range(nbins + fresh_used + 1):
            here = final_load(tgt) + s
            if here > 1:
                continue
            # even if every unassigned member joined this target it could not beat
            # the member's old load
            if here + suffix[k + 1] <= old[k]:
                continue
            # earlier members already placed here need the final load to beat theirs
            fill[tgt] = fill.get(tgt, Fraction(0)) + s
            assign.append(tgt)
            if all(
                final_load(assign[j]) + suffix[k + 1] > old[j] for j in range(k)
            ):
                yield from rec(k + 1, fresh_used + (tgt == nbins + fresh_used))
            assign.pop()
            fill[tgt] -= s
            if not fill[tgt]:
                del fill[tgt]

    yield from rec(0, 0)


def _fresh_bin_deviation(packing: Packing, loads: list[Fraction]) -> CoalitionDeviation | None:
    """A deviation in which a feasible set S jointly opens a fresh bin, if any.

    Any deviation yields one of this shape: let T be the target with the
    largest final load N.  Every member's old load is below N, and so is the
    old load of T's staying residents, hence T's final contents can move to a
    fresh bin together.  So a deviation exists iff for some load level L the
    items in bins of load <= L contain a set of total in (L, 1].
    """
    instance = packing.instance
    for level in sorted(set(loads)):
        pool = SizeClassPool.from_items(
            instance.items[instance.position(i)]
            for k, b in enumerate(packing.bins)
            if loads[k] <= level
            for i in b
        )
        best = max_subset(pool, Fraction(1))
        if best.total > level:
            size = instance.size_of
            members = tuple(sorted(best.ids))
            return CoalitionDeviation(
                members,
                {i: "new:0" for i in members},
                {i: size(i) / best.total for i in members},
            )
    return None


def is_strong_nash_direct(
    packing: Packing,
    max_coalition: int | None = None,
    budget: int = 2_000_000,
    method: str = "auto",
) -> StrongNashCheck:
    """Look for a coalition of at most ``max_coalition`` items whose joint
    move makes every member strictly cheaper.

    ``method="enumerate"`` walks every coalition up to the cap and every joint
    target assignment.  ``"auto"`` (default) first runs the exact fresh-bin
    test: if it finds no deviation there is none at any cap, and if its
    witness is small enough it is returned.  Only otherwise does it fall back
    to enumeration.  Exhausting ``budget`` search nodes gives an inconclusive
    result.
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    n = len(packing.instance.items)
    cap = n if max_coalition is None else min(max_coalition, n)
    if cap < 1:
        raise ValueError("max_coalition must be at least 1")
    loads = packing.loads()
    if method == "auto":
        dev = _fresh_bin_deviation(packing, loads)
        if dev is None:
            return StrongNashCheck(True, None, cap)
        if len(dev.coalition) <= cap:
            return StrongNashCheck(False, dev, cap)
    where = packing.bin_of()
    # an item in a full bin can never strictly improve, so it never joins
    movable = sorted(i for i in where if loads[where[i]] < 1)
    counter = [0]
    try:
        for size in range(1, cap + 1):
            for coalition in combinations(movable, size):
                for dev in _joint_deviations(coalition, packing, loads, where, counter, budget):
                    return StrongNashCheck(False, dev, cap)
    except _Budget:
        return StrongNashCheck(None, None, cap)
    return StrongNashCheck(True, None, cap)


def is_strong_nash_via_ss(packing: Packing) -> bool:
    """True iff the packing is a possible output of the SS heuristic.

    Bins are peeled in non-increasing load order; each peeled bin must attain
    the maximum subset sum of the items not yet peeled.
    """
    instance = packing.instance
    loads = packing.loads()
    order = sorted(range(len(loads)), key=lambda k: (-loads[k], k))
    remaining = SizeClassPool.from_items(instance.items)
    for k in order:
        best = max_subset(remaining, Fraction(1)).total
        if loads[k] != best:
            return False
        remaining = remaining.without(packing.bins[k])
    return len(remaining) == 0


def potential(packing: Packing) -> tuple[Fraction, ...]:
    """Sorted (non-increasing) load vector; grows lexicographically with every improving move."""
    return sorted_load_vector(packing)
