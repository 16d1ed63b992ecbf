"""Exact domain model: items, instances, packings and the proportional cost share.

Every size and load is a :class:`fractions.Fraction`; nothing in here touches
floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Rational = Fraction

PACKING_FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    """Raised when an instance text cannot be parsed or violates a size constraint."""


class PackingError(ValueError):
    """Raised when a packing document does not match its instance."""


@dataclass(frozen=True)
class Item:
    id: int
    size: Fraction

    def __post_init__(self) -> None:
        if not 0 < self.size <= 1:
            raise InstanceFormatError(f"item {self.id}: size {self.size} outside (0, 1]")


@dataclass(frozen=True)
class Instance:
    items: tuple[Item, ...]
    alpha: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise InstanceFormatError(f"alpha {self.alpha} outside (0, 1]")
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise InstanceFormatError(f"duplicate item id {item.id}")
            seen.add(item.id)
            if item.size > self.alpha:
                raise InstanceFormatError(
                    f"item {item.id}: size exceeds alpha ({item.size} > {self.alpha})"
                )

    @classmethod
    def from_sizes(cls, sizes: Iterable, alpha=Fraction(1)) -> "Instance":
        """Build an instance with dense ids ``0..n-1`` in the given order."""
        items = tuple(Item(i, Fraction(s)) for i, s in enumerate(sizes))
        return cls(items, Fraction(alpha))

    def __len__(self) -> int:
        return len(self.items)

    @property
    def sizes(self) -> tuple[Fraction, ...]:
        return tuple(item.size for item in self.items)

    def size_of(self, item_id: int) -> Fraction:
        return self._index()[item_id].size

    def _index(self) -> dict[int, Item]:
        # cached lazily; frozen dataclass so go through object.__setattr__
        try:
            return self.__dict__["_by_id"]
        except KeyError:
            index = {item.id: item for item in self.items}
            object.__setattr__(self, "_by_id", index)
            return index

    def position(self, item_id: int) -> int:
        """0-based input position of an item (used by the packing interchange)."""
        try:
            return self.__dict__["_pos"][item_id]
        except KeyError:
            pos = {item.id: k for k, item in enumerate(self.items)}
            object.__setattr__(self, "_pos", pos)
            return pos[item_id]

    def total_size(self) -> Fraction:
        return sum(self.sizes, Fraction(0))


@dataclass(frozen=True)
class Packing:
    """An assignment of item ids to bins.

    Construction does not enforce validity so that broken packings can be
    inspected with :func:`validate_packing`; use :meth:`checked` when a valid
    packing is required.
    """

    instance: Instance
    bins: tuple[tuple[int, ...], ...]

    @classmethod
    def from_bins(cls, instance: Instance, bins: Iterable[Iterable[int]]) -> "Packing":
        return cls(instance, tuple(tuple(b) for b in bins))

    def checked(self) -> "Packing":
        problems = validate_packing(self)
        if problems:
            raise PackingError("; ".join(problems))
        return self

    def __len__(self) -> int:
        return len(self.bins)

    def loads(self) -> list[Fraction]:
        size = self.instance.size_of
        return [sum((size(i) for i in b), Fraction(0)) for b in self.bins]

    def bin_of(self) -> dict[int, int]:
        return {i: k for k, b in enumerate(self.bins) for i in b}

    def with_bins(self, bins: Iterable[Iterable[int]]) -> "Packing":
        """Same instance, new bins; empty bins are dropped, surviving order kept."""
        return Packing(self.instance, tuple(tuple(b) for b in bins if len(b) > 0))

    def to_document(self) -> dict:
        pos = self.instance.position
        return {
            "format_version": PACKING_FORMAT_VERSION,
            "bins": [[pos(i) for i in b] for b in self.bins],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), separators=(",", ":")) + "\n"

    @classmethod
    def from_document(cls, instance: Instance, doc: dict) -> "Packing":
        if doc.get("format_version") != PACKING_FORMAT_VERSION:
            raise PackingError(f"unsupported packing format {doc.get('format_version')!r}")
        n = len(instance.items)
        bins = []
        for b in doc["bins"]:
            members = []
            for k in b:
                if not isinstance(k, int) or not 0 <= k < n:
                    raise PackingError(f"item index {k!r} out of range for {n} items")
                members.append(instance.items[k].id)
            bins.append(tuple(members))
        return cls(instance, tuple(bins))

    @classmethod
    def loads_document(cls, instance: Instance, text: str) -> "Packing":
        return cls.from_document(instance, json.loads(text))


def parse_fraction(token: str) -> Fraction:
    token = token.strip()
    num, sep, den = token.partition("/")
    try:
        if not sep:
            return Fraction(int(num))
        if int(den) == 0:
            raise InstanceFormatError(f"zero denominator in {token!r}")
        return Fraction(int(num), int(den))
    except ValueError:
        raise InstanceFormatError(f"malformed fraction {token!r}") from None


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_instance(text: str) -> Instance:
    """Parse the ``alpha p/q`` + one-size-per-line instance format."""
    alpha = None
    sizes: list[Fraction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if alpha is None:
            head, _, value = line.partition(" ")
            if head != "alpha" or not value.strip():
                raise InstanceFormatError(f"line {lineno}: expected 'alpha <p>/<q>' header")
            alpha = parse_fraction(value)
            if not 0 < alpha <= 1:
                raise InstanceFormatError(f"line {lineno}: alpha must lie in (0, 1]")
            continue
        size = parse_fraction(line)
        if size <= 0:
            raise InstanceFormatError(f"line {lineno}: size must be positive")
        if size > 1:
            raise InstanceFormatError(f"line {lineno}: size exceeds 1")
        if size > alpha:
            raise InstanceFormatError(f"line {lineno}: size exceeds alpha")
        sizes.append(size)
    if alpha is None:
        raise InstanceFormatError("missing 'alpha' header")
    return Instance.from_sizes(sizes, alpha)


def serialize_instance(instance: Instance) -> str:
    lines = [f"alpha {format_fraction(instance.alpha)}"]
    lines.extend(format_fraction(s) for s in instance.sizes)
    return "\n".join(lines) + "\n"


def bin_load(packing: Packing, bin_index: int) -> Fraction:
    size = packing.instance.size_of
    return sum((size(i) for i in packing.bins[bin_index]), Fraction(0))


def cost_share(item_id: int, packing: Packing) -> Fraction:
    """Payment ``s_i / s(B)`` of an item for the bin it sits in."""
    for k, b in enumerate(packing.bins):
        if item_id in b:
            return packing.instance.size_of(item_id) / bin_load(packing, k)
    raise KeyError(f"item {item_id} is not packed")


def validate_packing(packing: Packing) -> list[str]:
    """Return every violated packing invariant; an empty list means valid."""
    problems = []
    known = {item.id for item in packing.instance.items}
    seen: dict[int, int] = {}
    for k, b in enumerate(packing.bins):
        if not b:
            problems.append(f"bin {k} is empty")
            continue
        for i in b:
            if i not in known:
                problems.append(f"bin {k}: unknown item {i}")
            elif i in seen:
                problems.append(f"item {i} appears in bins {seen[i]} and {k}")
            else:
                seen[i] = k
        load = sum((packing.instance.size_of(i) for i in set(b) & known), Fraction(0))
        if load > 1:
            problems.append(f"bin {k} overfull: load {format_fraction(load)} > 1")
    for i in sorted(known - seen.keys()):
        problems.append(f"item {i} is not packed")
    return problems


def sorted_load_vector(packing: Packing) -> tuple[Fraction, ...]:
    return tuple(sorted(packing.loads(), reverse=True))


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)

