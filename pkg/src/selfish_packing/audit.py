"""Machine checks of the upper-bound arguments.

Two arguments are audited run by run: the SS weighting argument (weights per
SS bin, underpaid total, per-OPT-bin caps) and the price-of-anarchy weighting
argument for equilibria with sizes at most 1/t (load groups, regular bins,
Claims 40/41/50 and the weight caps).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .bounds import lambda_limit, lambda_r, lambda_t, mp_objective, poa_upper
from .core import Instance, Packing, format_fraction, validate_packing
from .game import SSTrace, find_improving_move

PROPORTIONAL = "proportional"
RAW = "raw-size"


class AuditError(ValueError):
    """Inputs that cannot be audited together (trace or instance mismatch)."""


@dataclass(frozen=True)
class AuditCheck:
    name: str
    status: str  # "pass", "fail" or "precondition-failed"
    detail: str = ""
    witness: dict[str, Fraction] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "detail": self.detail,
            "witness": {k: format_fraction(Fraction(v)) for k, v in self.witness.items()},
        }


@dataclass(frozen=True)
class AuditReport:
    kind: str
    checks: tuple[AuditCheck, ...]
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> AuditCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[AuditCheck]:
        return [c for c in self.checks if not c.passed]

    def to_document(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return format_fraction(v)
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v

        return {
            "kind": self.kind,
            "passed": self.passed,
            "checks": [c.to_document() for c in self.checks],
            "summary": enc(self.summary),
        }


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# -- SS weighting ------------------------------------------------------------


@dataclass(frozen=True)
class WeightAssignment:
    instance: Instance
    trace: SSTrace
    t: int | None
    weights: dict[int, Fraction]
    rules: tuple[str, ...]
    underpaid: tuple[Fraction, ...]

    def bin_weight(self, k: int) -> Fraction:
        return sum((self.weights[i] for i in self.trace.records[k].items), Fraction(0))

    def total_weight(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))


def _check_trace(instance: Instance, trace: SSTrace) -> None:
    seen: list[int] = [i for rec in trace.records for i in rec.items]
    ids = {item.id for item in instance.items}
    if len(seen) != len(set(seen)) or set(seen) != ids:
        raise AuditError("trace does not partition the instance's items")
    size = instance.size_of
    for k, rec in enumerate(trace.records):
        if sum((size(i) for i in rec.items), Fraction(0)) != rec.load:
            raise AuditError(f"trace record {k}: load does not match the instance")


def ss_weights(trace: SSTrace, instance: Instance, t: int | None = None) -> WeightAssignment:
    """Charge each item of an SS run.

    An item pays s_i/s(B) when its bin B met the threshold at opening
    (1 - s_min <= s(B), or max{1 - s_min, t/(t+1)} <= s(B) with t) and s_i
    otherwise; such a bin is underpaid by 1 - s(B).
    """
    _check_trace(instance, trace)
    if t is not None:
        if t < 1:
            raise AuditError("t must be positive")
        if any(x > Fraction(1, t) for x in instance.sizes):
            raise AuditError(f"an item exceeds 1/{t}")
    size = instance.size_of
    floor = Fraction(t, t + 1) if t is not None else Fraction(0)
    weights: dict[int, Fraction] = {}
    rules = []
    underpaid = []
    for rec in trace.records:
        if max(1 - rec.s_min, floor) <= rec.load:
            rules.append(PROPORTIONAL)
            underpaid.append(Fraction(0))
            for i in rec.items:
                weights[i] = size(i) / rec.load
        else:
            rules.append(RAW)
            underpaid.append(1 - rec.load)
            for i in rec.items:
                weights[i] = size(i)
    return WeightAssignment(instance, trace, t, weights, tuple(rules), tuple(underpaid))


def underpaid_total(assignment: WeightAssignment) -> Fraction:
    return sum(assignment.underpaid, Fraction(0))


@dataclass(frozen=True)
class OptBinAudit:
    index: int
    order: tuple[int, ...]  # reverse SS order
    weight: Fraction
    program_value: Fraction
    cap: Fraction
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


_FINE = Fraction(1, 10**30)


@lru_cache(maxsize=None)
def _limit_lower(t: int | None) -> Fraction:
    """Certified lower end of lambda (t None) or lambda^t."""
    return (lambda_limit(_FINE) if t is None else lambda_t(t, _FINE)).lower


def _cap_for(k: int, t: int | None) -> Fraction:
    return lambda_r(k) if t is None else _limit_lower(t)


def audit_vs_opt(
    assignment: WeightAssignment, opt_packing: Packing, t: int | None = None
) -> tuple[tuple[OptBinAudit, ...], AuditReport]:
    """Check the per-item constraints and per-bin caps on every bin of a
    feasible packing (typically an optimal one).

    Members of each bin are ordered in reverse SS order (later SS bin first,
    smaller id first within an SS bin) and O_i is the first i of them.
    """
    t = assignment.t if t is None else t
    instance = assignment.instance
    if opt_packing.instance != instance:
        raise AuditError("packing and weights refer to different instances")
    problems = validate_packing(opt_packing)
    if problems:
        raise AuditError("invalid packing: " + "; ".join(problems))
    step = assignment.trace.step_of()
    size = instance.size_of
    w = assignment.weights
    floor = Fraction(t, t + 1) if t is not None else None

    bins = []
    for k, b in enumerate(opt_packing.bins):
        order = tuple(sorted(b, key=lambda i: (-step[i], i)))
        violations = []
        prefix = Fraction(0)
        smallest = None
        for pos, i in enumerate(order):
            s = size(i)
            prefix += s
            smallest = s if smallest is None else min(smallest, s)
            if w[i] > s / prefix:
                violations.append(f"item {i}: w > s_i/s(O_{pos + 1})")
            if smallest < 1 and w[i] > s / (1 - smallest):
                violations.append(f"item {i}: w > s_i/(1 - min O_{pos + 1})")
            if floor is not None and w[i] > s / floor:
                violations.append(f"item {i}: w > s_i (t+1)/t")
        weight = sum((w[i] for i in order), Fraction(0))
        value = mp_objective([size(i) for i in order], t)
        cap = _cap_for(len(order), t)
        if weight > value:
            violations.append("bin weight exceeds the program objective of its sizes")
        if weight > cap:
            violations.append("bin weight exceeds its cap")
        bins.append(OptBinAudit(k, order, weight, value, cap, tuple(violations)))

    ss_bins = len(assignment.trace)
    total_w = assignment.total_weight()
    under = underpaid_total(assignment)
    sum_caps = sum((b.cap for b in bins), Fraction(0))
    opt_bins = len(opt_packing)
    limit = _limit_lower(t)

    checks = [
        AuditCheck(
            "bin_weights",
            _status(all(
                assignment.bin_weight(k) == (1 if rule == PROPORTIONAL else rec.load)
                for k, (rule, rec) in enumerate(zip(assignment.rules, assignment.trace.records))
            )),
            "every SS bin pays 1 or exactly its load",
        ),
        AuditCheck(
            "underpaid_at_most_1",
            _status(under <= 1),
            f"underpaid total {format_fraction(under)}",
            {"underpaid": under},
        ),
        AuditCheck(
            "per_item_constraints",
            _status(all(not any("item" in v for v in b.violations) for b in bins)),
            f"{sum(len(b.order) for b in bins)} items checked",
        ),
        AuditCheck(
            "per_bin_caps",
            _status(all(b.ok for b in bins)),
            "; ".join(f"bin {b.index}: {v}" for b in bins for v in b.violations)[:500] or f"{len(bins)} bins within cap",
            {f"opt_bin_{b.index}": b.weight for b in bins if not b.ok},
        ),
        AuditCheck(
            "cost_identity",
            _status(ss_bins == total_w + under),
            "SS bins = total weight + underpaid",
            {"ss_bins": Fraction(ss_bins), "total_weight": total_w, "underpaid": under},
        ),
        AuditCheck(
            "ratio_bound",
            _status(ss_bins <= sum_caps + 1 and ss_bins <= limit * opt_bins + 1),
            f"{ss_bins} <= sum of caps + 1 = {float(sum_caps + 1):.6f} <= limit * {opt_bins} + 1",
            {"sum_caps": sum_caps},
        ),
    ]
    report = AuditReport(
        "ss",
        tuple(checks),
        {
            "t": t,
            "ss_bins": ss_bins,
            "opt_bins": opt_bins,
            "total_weight": total_w,
            "underpaid": under,
            "rules": {PROPORTIONAL: assignment.rules.count(PROPORTIONAL), RAW: assignment.rules.count(RAW)},
        },
    )
    return tuple(bins), report


# -- price of anarchy weighting ------------------------------------------------

GROUPS = ("A", "B", "C", "D")


def group_thresholds(t: int) -> tuple[Fraction, Fraction, Fraction]:
    """(A/B, B/C, C/D) boundaries; a load equal to a boundary goes to the lower group."""
    if t < 2:
        raise AuditError("t must be at least 2")
    if t == 2:
        return Fraction(5, 6), Fraction(3, 4), Fraction(17, 24)
    return Fraction(2 * t + 1, 2 * (t + 1)), Fraction(t + 1, t + 2), Fraction(t * t - t + 1, t * t)


def t_item_range(t: int) -> tuple[Fraction, Fraction]:
    """Open-closed size interval of t-items."""
    if t == 2:
        return Fraction(7, 24), Fraction(1, 2)
    return Fraction(t - 1, t * t), Fraction(1, t)


def group_of(load: Fraction, t: int) -> str:
    ab, bc, cd = group_thresholds(t)
    if load > ab:
        return "A"
    if load > bc:
        return "B"
    if load > cd:
        return "C"
    return "D"


@dataclass(frozen=True)
class GroupClassification:
    t: int
    labels: tuple[str, ...]
    loads: tuple[Fraction, ...]
    counts: dict[str, int]
    special: frozenset[int]
    regular: frozenset[int]  # B/C/D bins with exactly t items in the t-item range
    t_items: frozenset[int]  # items of non-special regular bins


class PreconditionError(AuditError):
    """The packing does not satisfy a checker's hypotheses."""


def _check_preconditions(packing: Packing, t: int, require_nash: bool) -> None:
    if t < 2:
        raise PreconditionError("t must be at least 2")
    problems = validate_packing(packing)
    if problems:
        raise PreconditionError("invalid packing: " + "; ".join(problems[:3]))
    if any(s > Fraction(1, t) for s in packing.instance.sizes):
        raise PreconditionError(f"an item exceeds 1/{t}")
    if require_nash:
        move = find_improving_move(packing)
        if move is not None:
            raise PreconditionError("not a Nash equilibrium: " + move.describe())


SPECIAL_RULES = ("positional", "exceptions")


def classify_groups(
    ne_packing: Packing, t: int, require_nash: bool = True, special: str = "positional"
) -> GroupClassification:
    """Label every bin A/B/C/D by load and mark the special and regular bins.

    Within a group bins are ranked by non-increasing load (ties by index).
    With ``special="positional"`` the special bins are the highest-load bin
    of B, C and D and the two lowest-load bins of D.  With
    ``special="exceptions"`` they are the B/C/D bins that are not regular
    plus the regular ones with load at most t/(t+1), i.e. exactly the bins
    the weight argument cannot charge.
    """
    if special not in SPECIAL_RULES:
        raise AuditError(f"unknown special-bin rule {special!r}")
    _check_preconditions(ne_packing, t, require_nash)
    loads = tuple(ne_packing.loads())
    labels = tuple(group_of(x, t) for x in loads)
    counts = {g: labels.count(g) for g in GROUPS}
    lo, hi = t_item_range(t)
    size = ne_packing.instance.size_of
    regular = set()
    for k, b in enumerate(ne_packing.bins):
        if labels[k] != "A" and len(b) == t and all(lo < size(i) <= hi for i in b):
            regular.add(k)
    chosen: set[int] = set()
    if special == "positional":
        for g in ("B", "C", "D"):
            members = sorted((k for k, lab in enumerate(labels) if lab == g), key=lambda k: (-loads[k], k))
            if members:
                chosen.add(members[0])
            if g == "D":
                chosen.update(members[-2:])
    else:
        floor = Fraction(t, t + 1)
        chosen = {k for k, lab in enumerate(labels) if lab != "A" and (k not in regular or loads[k] <= floor)}
    t_items = frozenset(i for k in regular - chosen for i in ne_packing.bins[k])
    return GroupClassification(t, labels, loads, counts, frozenset(chosen), frozenset(regular), t_items)


def _precondition_report(kind: str, err: Exception) -> AuditReport:
    return AuditReport(kind, (AuditCheck("preconditions", "precondition-failed", str(err)),))


def claim40_check(ne_packing: Packing, t: int) -> AuditReport:
    """At most two bins of an equilibrium with sizes <= 1/t have load <= t/(t+1)."""
    try:
        _check_preconditions(ne_packing, t, True)
    except PreconditionError as err:
        return _precondition_report("claim40", err)
    threshold = Fraction(t, t + 1)
    low = [k for k, x in enumerate(ne_packing.loads()) if x <= threshold]
    return AuditReport(
        "claim40",
        (AuditCheck("low_bins_at_most_2", _status(len(low) <= 2), f"{len(low)} bins with load <= t/(t+1): {low[:10]}"),),
        {"low_bins": low},
    )


def claim41_check(ne_packing: Packing, t: int, budget: int = 5) -> AuditReport:
    """All but ``budget`` of the B/C/D bins hold exactly t items in the t-item range."""
    try:
        cls = classify_groups(ne_packing, t)
    except PreconditionError as err:
        return _precondition_report("claim41", err)
    exceptions = [k for k, lab in enumerate(cls.labels) if lab != "A" and k not in cls.regular]
    outside_special = [k for k in exceptions if k not in cls.special]
    return AuditReport(
        "claim41",
        (
            AuditCheck(
                "non_regular_within_budget",
                _status(len(exceptions) <= budget),
                f"{len(exceptions)} non-regular B/C/D bins (budget {budget}); "
                f"{len(outside_special)} of them are not special bins",
            ),
        ),
        {"exceptions": exceptions, "non_special_exceptions": outside_special, "counts": cls.counts},
    )


def tuple_observation(t: int) -> bool:
    """Any t sizes from the t-item range sum to more than any t-1 of them."""
    lo, hi = t_item_range(t)
    # infimum of a t-tuple vs maximum of a (t-1)-tuple
    return t * lo >= (t - 1) * hi


def claim50_check(ne_packing: Packing, opt_packing: Packing, t: int) -> AuditReport:
    """Of the t-items in OPT bins holding t+1 of them, at most (N_t - 1) t sit
    in equilibrium bins made only of such items."""
    try:
        cls = classify_groups(ne_packing, t)
    except PreconditionError as err:
        return _precondition_report("claim50", err)
    if opt_packing.instance != ne_packing.instance or validate_packing(opt_packing):
        return _precondition_report("claim50", PreconditionError("invalid optimal packing"))
    heavy = [b for b in opt_packing.bins if sum(1 for i in b if i in cls.t_items) == t + 1]
    n_t = len(heavy)
    in_heavy = {i for b in heavy for i in b if i in cls.t_items}
    tupled = 0
    for k in cls.regular - cls.special:
        b = ne_packing.bins[k]
        if all(i in in_heavy for i in b):
            tupled += len(b)
    ok = n_t == 0 or tupled <= (n_t - 1) * t
    obs = tuple_observation(t)
    return AuditReport(
        "claim50",
        (
            AuditCheck(
                "tuple_count",
                _status(ok),
                f"N_t = {n_t}, t-items packed in all-heavy equilibrium tuples = {tupled}, "
                f"limit {(n_t - 1) * t if n_t else 'vacuous'}",
            ),
            AuditCheck("tuple_observation", _status(obs), "t-tuples of t-items outweigh (t-1)-tuples"),
        ),
        {"N_t": n_t, "tupled": tupled},
    )


def poa_weights(cls: GroupClassification, ne_packing: Packing) -> dict[int, Fraction]:
    """w_t: c x everywhere, plus (1 - cL)/k on non-special regular bins, c = 2(t+1)/(2t+1)."""
    t = cls.t
    c = Fraction(2 * (t + 1), 2 * t + 1)
    size = ne_packing.instance.size_of
    weights = {}
    for k, b in enumerate(ne_packing.bins):
        bonus = Fraction(0)
        if k in cls.regular and k not in cls.special:
            bonus = (1 - c * cls.loads[k]) / len(b)
        for i in b:
            weights[i] = c * size(i) + bonus
    return weights


def poa_weight_audit(
    ne_packing: Packing, opt_packing: Packing, t: int, special: str = "positional", budget: int = 5
) -> AuditReport:
    """Check the w_t weighting: equilibrium bins, optimal-bin caps and the
    aggregate bound NE <= poa_upper(t) OPT + 5."""
    try:
        cls = classify_groups(ne_packing, t, special=special)
    except PreconditionError as err:
        return _precondition_report("poa", err)
    if opt_packing.instance != ne_packing.instance or validate_packing(opt_packing):
        return _precondition_report("poa", PreconditionError("invalid optimal packing"))
    w = poa_weights(cls, ne_packing)

    def total(b: Iterable[int]) -> Fraction:
        return sum((w[i] for i in b), Fraction(0))

    ne_bad = []
    for k, b in enumerate(ne_packing.bins):
        if k in cls.special:
            continue
        wt = total(b)
        if k in cls.regular:
            if wt != 1:
                ne_bad.append((k, wt))
        elif wt < 1:
            ne_bad.append((k, wt))
    heavy_cap = Fraction(t + 1, t)
    light_cap = Fraction(2 * t + 3, 2 * t + 1)
    opt_bad = []
    n_heavy = 0
    for k, b in enumerate(opt_packing.bins):
        n_t_items = sum(1 for i in b if i in cls.t_items)
        cap = heavy_cap if n_t_items == t + 1 else light_cap
        n_heavy += n_t_items == t + 1
        wt = total(b)
        if n_t_items > t + 1 or wt > cap:
            opt_bad.append((k, wt, cap))
    ne_bins, opt_bins = len(ne_packing), len(opt_packing)
    bound = poa_upper(t) * opt_bins + 5
    total_weight = total(i for b in ne_packing.bins for i in b)
    checks = (
        AuditCheck(
            "special_budget",
            _status(len(cls.special) <= budget),
            f"{len(cls.special)} special bins ({special}), budget {budget}",
        ),
        AuditCheck(
            "ne_bin_weights",
            _status(not ne_bad),
            "; ".join(f"bin {k}: {format_fraction(x)}" for k, x in ne_bad[:10]) or "non-special bins weigh >= 1, regular exactly 1",
            {f"ne_bin_{k}": x for k, x in ne_bad[:10]},
        ),
        AuditCheck(
            "opt_bin_caps",
            _status(not opt_bad),
            "; ".join(f"bin {k}: {format_fraction(x)} > {format_fraction(c)}" for k, x, c in opt_bad[:10]) or f"{opt_bins} bins within cap",
            {f"opt_bin_{k}": x for k, x, _ in opt_bad[:10]},
        ),
        AuditCheck(
            "weight_covers_bins",
            _status(ne_bins - len(cls.special) <= total_weight),
            f"{ne_bins} NE bins, {len(cls.special)} special, total weight {float(total_weight):.6f}",
            {"total_weight": total_weight},
        ),
        AuditCheck(
            "aggregate_bound",
            _status(ne_bins <= bound),
            f"{ne_bins} <= poa_upper(t) * {opt_bins} + 5 = {float(bound):.6f}",
            {"bound": bound},
        ),
    )
    return AuditReport(
        "poa",
        checks,
        {
            "t": t,
            "special_rule": special,
            "ne_bins": ne_bins,
            "opt_bins": opt_bins,
            "counts": cls.counts,
            "N_t": n_heavy,
            "special": sorted(cls.special),
        },
    )


GROUP_CSV_HEADER = ("name", "t", "n_A", "n_B", "n_C", "n_D", "bins")


def group_counts_csv(rows: Iterable[tuple[str, GroupClassification]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GROUP_CSV_HEADER)
    for name, cls in rows:
        c = cls.counts
        writer.writerow([name, cls.t, c["A"], c["B"], c["C"], c["D"], len(cls.labels)])
    return buf.getvalue()


__all__ = [
    "PROPORTIONAL",
    "RAW",
    "AuditError",
    "PreconditionError",
    "AuditCheck",
    "AuditReport",
    "WeightAssignment",
    "ss_weights",
    "underpaid_total",
    "OptBinAudit",
    "audit_vs_opt",
    "GROUPS",
    "group_thresholds",
    "t_item_range",
    "group_of",
    "GroupClassification",
    "SPECIAL_RULES",
    "classify_groups",
    "claim40_check",
    "claim41_check",
    "tuple_observation",
    "claim50_check",
    "poa_weights",
    "poa_weight_audit",
    "GROUP_CSV_HEADER",
    "group_counts_csv",
]
