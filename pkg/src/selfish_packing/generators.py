"""Adversarial instance families with their designed packings.

Three families are produced: the Graham-style SS lower-bound instance, its
parametric analogue for sizes at most 1/t, and the phased price-of-anarchy
construction with a designed optimal packing and a designed equilibrium.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from pathlib import Path

from .bounds import poa_lower
from .core import (
    Instance,
    Packing,
    PackingError,
    format_fraction,
    parse_fraction,
    parse_instance,
    serialize_instance,
    validate_packing,
)
from .game import find_improving_move, ss_pack
from .solver import OptBudgetExceeded, opt_pack


class GeneratorError(ValueError):
    """Parameters outside a family's domain (divisibility, size caps, integrality)."""


# -- Graham-style family -----------------------------------------------------


def graham_epsilon(r: int) -> Fraction:
    return Fraction(1, 2 ** (2 * r))


def graham_divisor(r: int, strict: bool = False) -> int:
    """Required divisor of N: lcm of the group sizes 2^i - 1 (i < r).

    ``strict`` also includes 2^(r-1), the group size of the smallest class.
    """
    groups = [2**i - 1 for i in range(1, r)]
    if strict:
        groups.append(2 ** (r - 1))
    return lcm(*groups) if groups else 1


def gen_graham(r: int, N: int, strict: bool = False) -> Instance:
    """N items of 2^-i + eps for each i < r and N items of 2^-(r-1) - r eps."""
    if r < 2:
        raise GeneratorError("r must be at least 2")
    if N < 1:
        raise GeneratorError("N must be positive")
    div = graham_divisor(r, strict)
    if N % div:
        raise GeneratorError(f"N = {N} is not a multiple of {div}")
    eps = graham_epsilon(r)
    sizes = []
    for i in range(1, r):
        sizes += [Fraction(1, 2**i) + eps] * N
    sizes += [Fraction(1, 2 ** (r - 1)) - r * eps] * N
    return Instance.from_sizes(sizes, Fraction(1))


def chain_packing(instance: Instance, classes: int, N: int, per_class: list[int] | None = None) -> Packing:
    """N bins, bin k taking the k-th block of every class (class c holds
    ``per_class[c]`` items per bin; default one)."""
    per_class = per_class or [1] * classes
    ids = [item.id for item in instance.items]
    bins: list[list[int]] = [[] for _ in range(N)]
    pos = 0
    for c in range(classes):
        m = per_class[c]
        for k in range(N):
            bins[k].extend(ids[pos : pos + m])
            pos += m
    if pos != len(ids):
        raise GeneratorError("instance does not match the chain layout")
    return Packing.from_bins(instance, bins)


def graham_chain_packing(instance: Instance, r: int, N: int) -> Packing:
    """N bins each holding one item of every class (load 1 - eps)."""
    return chain_packing(instance, r, N)


# -- parametric family -------------------------------------------------------


def parametric_epsilon(t: int, r: int) -> Fraction:
    return Fraction(1, (t + 1) ** 2 * 2 ** (2 * r))


def parametric_divisor(t: int, r: int) -> int:
    """lcm of the per-bin group sizes SS uses on the parametric instance."""
    groups = [(t + 1) * 2 ** (i - t) - 1 for i in range(t + 1, r)]
    groups.append((t + 1) * 2 ** (r - 1 - t))
    return lcm(*groups)


def gen_parametric_ss(t: int, r: int, N: int) -> Instance:
    """Nt items of 1/(t+1) + eps, N items of 1/((t+1) 2^(i-t)) + eps for
    t < i < r, and N items of 1/((t+1) 2^(r-1-t)) - r eps; alpha = 1/t."""
    if t < 2:
        raise GeneratorError("t must be at least 2")
    if r <= t:
        raise GeneratorError("r must exceed t")
    if N < 1:
        raise GeneratorError("N must be positive")
    div = parametric_divisor(t, r)
    if N % div:
        raise GeneratorError(f"N = {N} is not a multiple of {div}")
    eps = parametric_epsilon(t, r)
    alpha = Fraction(1, t)
    sizes = [Fraction(1, t + 1) + eps] * (N * t)
    for i in range(t + 1, r):
        sizes += [Fraction(1, (t + 1) * 2 ** (i - t)) + eps] * N
    sizes += [Fraction(1, (t + 1) * 2 ** (r - 1 - t)) - r * eps] * N
    if any(s > alpha or s <= 0 for s in sizes):
        raise GeneratorError("a generated size falls outside (0, 1/t]")
    return Instance.from_sizes(sizes, alpha)


def parametric_chain_packing(instance: Instance, t: int, r: int, N: int) -> Packing:
    """N bins: t items of the largest class plus one of every other (load 1 - eps)."""
    return chain_packing(instance, r - t + 1, N, [t] + [1] * (r - t))


def measure_ratio(
    instance: Instance, opt_hint: Packing | None = None, budget: int = 200_000
) -> tuple[int, int, Fraction]:
    """(SS bins, reference bins, ratio); the reference is the hint if given, else OPT."""
    ss, _ = ss_pack(instance)
    if opt_hint is not None:
        problems = validate_packing(opt_hint)
        if problems or opt_hint.instance != instance:
            raise PackingError("invalid hint: " + "; ".join(problems or ["instance mismatch"]))
        ref = len(opt_hint)
    else:
        ref = len(opt_pack(instance, budget))
    if ref == 0:
        return len(ss), 0, Fraction(1)
    return len(ss), ref, Fraction(len(ss), ref)


# -- price of anarchy construction ---------------------------------------------

RECURRENCES = ("printed", "consistent")
MODES = ("exact", "floor")


def _group(t: int, j: int, recurrence: str) -> Fraction:
    # divisor in r_{j+1} = (r_j - 1) / group
    return Fraction((t + 1) * 2**j) if recurrence == "consistent" else Fraction(t + 1) * Fraction(2) ** (j - 1)


def poa_sequences(t: int, s: int, n: int, mode: str = "exact", recurrence: str = "printed"):
    """The r_j and d_j sequences for j = 0..s.

    ``printed``: r_1 = n/(t+1), d_1 = tn/(t+1), r_{j+1} = (r_j - 1)/((t+1) 2^(j-1)),
    d_{j+1} = ((t+1) 2^(j-1) - 1) r_{j+1} + 1.

    ``consistent``: r_{j+1} = (r_j - 1)/((t+1) 2^j) from r_0 = n and
    d_{j+1} = ((t+1) 2^j - 1) r_{j+1} + 1, which is the count that fills
    every phase-(j+1) equilibrium bin exactly.

    ``floor`` rounds every division down; ``exact`` raises if one is fractional.
    """
    if mode not in MODES:
        raise GeneratorError(f"unknown mode {mode!r}")
    if recurrence not in RECURRENCES:
        raise GeneratorError(f"unknown recurrence {recurrence!r}")

    def div(num: Fraction, den: Fraction, what: str) -> int:
        q = Fraction(num) / den
        if q.denominator != 1:
            if mode == "exact":
                raise GeneratorError(f"{what} = {q} is not an integer (n = {n})")
            return q.numerator // q.denominator
        return q.numerator

    r = [n]
    d = [0]
    if recurrence == "printed":
        r1 = div(Fraction(n), Fraction(t + 1), "r_1")
        r.append(r1)
        d.append(n - r1)
    for j in range(len(r) - 1, s):
        nxt = div(Fraction(r[j] - 1), _group(t, j, recurrence), f"r_{j + 1}")
        if nxt < 0:
            raise GeneratorError(f"r_{j + 1} would be negative")
        r.append(nxt)
        g = (t + 1) * 2**j if recurrence == "consistent" else (t + 1) * 2 ** (j - 1)
        d.append((g - 1) * nxt + 1)
    return tuple(r[: s + 1]), tuple(d[: s + 1])


def delta_ladder(s: int, n: int) -> tuple[Fraction, ...]:
    """delta_j = (4n)^-(3s - 2j) for j = 0..s."""
    return tuple(Fraction(1, (4 * n) ** (3 * s - 2 * j)) for j in range(s + 1))


@dataclass(frozen=True)
class PoAConstructionParams:
    t: int
    s: int
    n: int
    mode: str
    recurrence: str
    deltas: tuple[Fraction, ...]
    Delta: Fraction
    r: tuple[int, ...]
    d: tuple[int, ...]

    def to_document(self) -> dict:
        return {
            "t": self.t,
            "s": self.s,
            "n": self.n,
            "mode": self.mode,
            "recurrence": self.recurrence,
            "delta": [format_fraction(x) for x in self.deltas],
            "Delta": format_fraction(self.Delta),
            "r": list(self.r),
            "d": list(self.d),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "PoAConstructionParams":
        return cls(
            doc["t"],
            doc["s"],
            doc["n"],
            doc["mode"],
            doc["recurrence"],
            tuple(parse_fraction(x) for x in doc["delta"]),
            parse_fraction(doc["Delta"]),
            tuple(doc["r"]),
            tuple(doc["d"]),
        )


@dataclass(frozen=True)
class ConstructionBundle:
    instance: Instance
    opt_packing: Packing
    ne_packing: Packing
    params: PoAConstructionParams
    item_labels: tuple[str, ...]
    ne_bin_phases: tuple[int, ...]
    opt_bin_levels: tuple[int, ...]
    notes: tuple[str, ...] = field(default=())

    @property
    def expected_ne_bins(self) -> int:
        p = self.params
        return p.t**2 * p.n - 1 + sum(p.r[1:])

    @property
    def opt_bin_cap(self) -> int:
        p = self.params
        return (p.t * (p.t - 1) + 1) * p.n


def poa_family_sizes(params: PoAConstructionParams) -> dict[str, Fraction]:
    """Sizes of the single-size families (indexed families are computed on demand)."""
    t, n, D = params.t, params.n, params.Delta
    base = Fraction(1, t + 1)
    out = {
        "sigma01": base + D * n * t * t * (t - 1) + D,
        "sigma02": base - D * n * t * (t - 1),
        "sigma05": base,
    }
    for j in range(1, params.s + 1):
        out[f"sigma{j}"] = Fraction(1, (t + 1) * 2**j) + 2 * (params.d[j] + 1) * params.deltas[j]
    return out


def _label_size(label: str, params: PoAConstructionParams, fixed: dict[str, Fraction]) -> Fraction:
    if label in fixed:
        return fixed[label]
    t, n, D = params.t, params.n, params.Delta
    base = Fraction(1, t + 1)
    kind, _, rest = label.partition("[")
    idx = [int(x) for x in rest.rstrip("]").split("][")]
    if kind == "sigma03":
        return base + D * n * t * (t - 1) + idx[0] * D
    if kind == "sigma04":
        return base - idx[0] * D
    j, i = idx
    unit = Fraction(1, (t + 1) * 2**j)
    if kind == "pi":
        return unit + (2 * i - 1) * params.deltas[j]
    if kind == "theta":
        return unit - 2 * i * params.deltas[j]
    raise GeneratorError(f"unknown item label {label!r}")  # pragma: no cover


def min_valid_n(t: int, s: int, recurrence: str = "printed") -> int:
    """Smallest n > max(2^(s^3), t) for which every r_j and d_j is an integer."""
    if t < 2 or s < 1:
        raise GeneratorError("need t >= 2 and s >= 1")
    n = max(2 ** (s**3), t) + 1
    while True:
        try:
            poa_sequences(t, s, n, "exact", recurrence)
            return n
        except GeneratorError:
            n += 1


def gen_poa_lower(
    t: int, s: int, n: int, mode: str = "exact", recurrence: str = "printed"
) -> ConstructionBundle:
    """The phased price-of-anarchy instance with its designed packings.

    The designed optimal packing uses levels 0..s+1 (plus, in floor mode,
    extra bins that are subsets of a level s+1 bin).  The designed equilibrium
    packs the phase-0 items into the second and third bin types and phase j
    items into r_j bins of one sigma_j plus (t+1) 2^(j-1) - 1 pairs each.
    When the pair supply does not match that count (the printed recurrence),
    bins are filled in order and leftover pairs open further bins.
    """
    if t < 2:
        raise GeneratorError("t must be at least 2")
    if s < 1:
        raise GeneratorError("s must be at least 1")
    if n <= t:
        raise GeneratorError("n must exceed t")
    if mode == "exact" and s <= 2 and n <= 2 ** (s**3):
        raise GeneratorError(f"exact mode needs n > 2^(s^3) = {2 ** (s**3)}")
    r, d = poa_sequences(t, s, n, mode, recurrence)
    deltas = delta_ladder(s, n)
    Delta = 2 * deltas[0] / (n * t * (t - 1) + 1)
    params = PoAConstructionParams(t, s, n, mode, recurrence, deltas, Delta, r, d)
    fixed = poa_family_sizes(params)
    m = t * (t - 1) * n

    # full item list before removal, with labels
    labels: list[str] = []
    labels += ["sigma01"] * (n * t)
    labels += ["sigma02"] * m
    for i in range(1, m + 1):
        labels += [f"sigma03[{i}]", f"sigma04[{i}]"]
    labels += ["sigma05"] * ((t - 2) * m)
    for j in range(1, s + 1):
        labels += [f"sigma{j}"] * r[j]
        for i in range(1, d[j] + 1):
            labels += [f"pi[{j}][{i}]", f"theta[{j}][{i}]"]

    # pools of full-list positions per family, consumed in order
    pools: dict[str, list[int]] = {}
    for k, lab in enumerate(labels):
        pools.setdefault(lab, []).append(k)
    cursor = {lab: 0 for lab in pools}

    def take(lab: str, count: int = 1) -> list[int]:
        pool = pools.get(lab, [])
        c = cursor.get(lab, 0)
        if c + count > len(pool):
            raise GeneratorError(f"ran out of {lab} items")
        cursor[lab] = c + count
        return pool[c : c + count]

    # designed optimal packing
    opt_bins: list[list[int]] = []
    levels: list[int] = []
    for i in range(1, m + 1):
        opt_bins.append(take("sigma05", t - 2) + take("sigma02") + take(f"sigma03[{i}]") + take(f"sigma04[{i}]"))
        levels.append(0)
    for j in range(1, s + 1):
        for i in range(1, d[j] + 1):
            b = take("sigma01", t)
            for k in range(1, j):
                b += take(f"sigma{k}")
            opt_bins.append(b + take(f"pi[{j}][{i}]") + take(f"theta[{j}][{i}]"))
            levels.append(j)
    for _ in range(r[s]):
        b = take("sigma01", t)
        for k in range(1, s + 1):
            b += take(f"sigma{k}")
        opt_bins.append(b)
        levels.append(s + 1)
    # leftovers (floor mode): subsets of a level s+1 bin
    while any(cursor[lab] < len(pools[lab]) for lab in ["sigma01"] + [f"sigma{k}" for k in range(1, s + 1)] if lab in pools):
        left01 = len(pools["sigma01"]) - cursor["sigma01"]
        b = take("sigma01", min(t, left01))
        for k in range(1, s + 1):
            lab = f"sigma{k}"
            if lab in pools and cursor[lab] < len(pools[lab]):
                b += take(lab)
        opt_bins.append(b)
        levels.append(s + 1)
    unused = [lab for lab in pools if cursor[lab] != len(pools[lab])]
    if unused:  # pragma: no cover - every family is consumed above
        raise GeneratorError(f"designed optimal packing misses {unused}")

    # removal step
    removed = {pools["sigma03[1]"][0], pools[f"sigma04[{m}]"][0]}
    removed.update(pools.get("sigma05", [])[len(pools.get("sigma05", [])) - (t - 2) :] if t > 2 else [])
    for j in range(1, s + 1):
        if d[j] >= 1:
            removed.add(pools[f"pi[{j}][1]"][0])
            removed.add(pools[f"theta[{j}][{d[j]}]"][0])

    keep = [k for k in range(len(labels)) if k not in removed]
    new_id = {k: i for i, k in enumerate(keep)}
    kept_labels = tuple(labels[k] for k in keep)
    sizes = [_label_size(lab, params, fixed) for lab in kept_labels]
    alpha = Fraction(1, t)
    if any(not 0 < x <= alpha for x in sizes):
        raise GeneratorError("a construction size falls outside (0, 1/t]; increase n")
    instance = Instance.from_sizes(sizes, alpha)
    opt_packing = Packing.from_bins(
        instance, [[new_id[k] for k in b if k in new_id] for b in opt_bins]
    )

    # designed equilibrium over the kept items
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(kept_labels):
        by_label.setdefault(lab, []).append(i)
    ne_bins: list[list[int]] = []
    phases: list[int] = []
    s01, s02 = by_label["sigma01"], by_label["sigma02"]
    for k in range(n * t):
        ne_bins.append(s02[k * (t - 1) : (k + 1) * (t - 1)] + [s01[k]])
        phases.append(0)
    s05 = by_label.get("sigma05", [])
    for i in range(1, m):
        ne_bins.append(
            s05[(i - 1) * (t - 2) : i * (t - 2)]
            + by_label[f"sigma03[{i + 1}]"]
            + by_label[f"sigma04[{i}]"]
        )
        phases.append(0)
    notes: list[str] = []
    for j in range(1, s + 1):
        per_bin = (t + 1) * 2 ** (j - 1) - 1
        pairs = [by_label[f"pi[{j}][{i + 1}]"] + by_label[f"theta[{j}][{i}]"] for i in range(1, d[j])]
        sigmas = by_label.get(f"sigma{j}", [])
        need = per_bin * len(sigmas)
        if len(pairs) != need:
            notes.append(
                f"phase {j}: {len(pairs)} pairs available, {need} needed for "
                f"{len(sigmas)} bins of {per_bin} pairs"
            )
        for k, sid in enumerate(sigmas):
            b = [sid]
            for pair in pairs[k * per_bin : (k + 1) * per_bin]:
                b += pair
            ne_bins.append(b)
            phases.append(j)
        for k in range(len(sigmas) * per_bin, len(pairs), per_bin):
            ne_bins.append([x for pair in pairs[k : k + per_bin] for x in pair])
            phases.append(j)
    ne_packing = Packing.from_bins(instance, ne_bins)

    return ConstructionBundle(
        instance,
        opt_packing,
        ne_packing,
        params,
        kept_labels,
        tuple(phases),
        tuple(levels),
        tuple(notes),
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    required: bool = True


@dataclass(frozen=True)
class ConstructionReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    def get(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_document(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "required": c.required, "detail": c.detail}
                for c in self.checks
            ],
        }


def observation21_bounds(t: int, j: int, n: int) -> tuple[Fraction, Fraction]:
    """Stated enclosure n/((t+1)^j 2^(j(j-1)/2)) - 1 <= r_j <= n/((t+1)^j 2^(j(j-1)/2))."""
    hi = Fraction(n, (t + 1) ** j * 2 ** (j * (j - 1) // 2))
    return hi - 1, hi


def recurrence_scale(t: int, j: int, n: int, recurrence: str) -> Fraction:
    """Leading term n / ((t+1)^j 2^e) of r_j under the chosen recurrence."""
    e = (j - 1) * (j - 2) // 2 if recurrence == "printed" else j * (j - 1) // 2
    return Fraction(n, (t + 1) ** j * 2**e)


def verify_poa_construction(bundle: ConstructionBundle) -> ConstructionReport:
    """Exact certification of a construction bundle.

    Required checks: both packings valid, phase-0 equilibrium bins at the
    common load t/(t+1) + 2 delta_0, bin counts, loads increasing with phase
    (b), no improving move (c), and NE >= poa_lower(t, s) * OPT - (s + 1)
    (the inequality the lower-bound argument actually yields).  The
    Observation-21 comparison (d) and the exact ratio comparison are reported
    without affecting the verdict.
    """
    p = bundle.params
    t, s, n = p.t, p.s, p.n
    checks: list[CheckResult] = []

    opt_problems = validate_packing(bundle.opt_packing)
    checks.append(CheckResult("a_opt_valid", not opt_problems, "; ".join(opt_problems[:5]) or f"{len(bundle.opt_packing)} bins, all loads <= 1"))
    ne_problems = validate_packing(bundle.ne_packing)
    checks.append(CheckResult("ne_valid", not ne_problems, "; ".join(ne_problems[:5]) or f"{len(bundle.ne_packing)} bins, all loads <= 1"))

    loads = bundle.ne_packing.loads()
    target = Fraction(t, t + 1) + 2 * p.deltas[0]
    phase0 = [loads[k] for k, ph in enumerate(bundle.ne_bin_phases) if ph == 0]
    off = [x for x in phase0 if x != target]
    checks.append(
        CheckResult(
            "equal_phase0_loads",
            not off,
            f"{len(phase0)} phase-0 bins, {len(off)} differ from t/(t+1) + 2 delta_0",
        )
    )

    ne_count, opt_count = len(bundle.ne_packing), len(bundle.opt_packing)
    count_ok = ne_count == bundle.expected_ne_bins and opt_count <= bundle.opt_bin_cap
    checks.append(
        CheckResult(
            "bin_counts",
            count_ok,
            f"NE {ne_count} (expected t^2 n - 1 + sum r_j = {bundle.expected_ne_bins}), "
            f"OPT {opt_count} (cap {bundle.opt_bin_cap})",
        )
    )

    by_phase: dict[int, list[Fraction]] = {}
    for k, ph in enumerate(bundle.ne_bin_phases):
        by_phase.setdefault(ph, []).append(loads[k])
    mono_ok = True
    detail = []
    for j in range(1, s + 1):
        lo_j = min(by_phase.get(j, [Fraction(2)]))
        hi_prev = max(by_phase.get(j - 1, [Fraction(0)]))
        if not hi_prev < lo_j:
            mono_ok = False
            detail.append(f"phase {j} min load {float(lo_j):.6f} <= phase {j - 1} max {float(hi_prev):.6f}")
    checks.append(CheckResult("b_monotone_phases", mono_ok, "; ".join(detail) or "loads strictly increase with phase"))

    move = find_improving_move(bundle.ne_packing) if not ne_problems else None
    nash_ok = not ne_problems and move is None
    checks.append(
        CheckResult(
            "c_is_nash",
            nash_ok,
            move.describe() if move else ("no improving move" if nash_ok else "packing invalid"),
        )
    )

    d_parts = []
    for j in range(1, s + 1):
        lo, hi = observation21_bounds(t, j, n)
        rec = recurrence_scale(t, j, n, p.recurrence)
        inside = lo <= p.r[j] <= hi
        d_parts.append(
            f"r_{j} = {p.r[j]}: stated bounds [{float(lo):.4f}, {float(hi):.4f}] "
            f"{'hold' if inside else 'violated'}; recurrence scale {float(rec):.4f}"
        )
    obs_ok = all(observation21_bounds(t, j, n)[0] <= p.r[j] <= observation21_bounds(t, j, n)[1] for j in range(1, s + 1))
    checks.append(CheckResult("d_observation21", obs_ok, "; ".join(d_parts), required=False))

    lb = poa_lower(t, s)
    certified = ne_count >= lb * bundle.opt_bin_cap - (s + 1)
    checks.append(
        CheckResult(
            "e_ratio_certified",
            certified,
            f"NE {ne_count} vs poa_lower(t, s) * {bundle.opt_bin_cap} - {s + 1} = {float(lb * bundle.opt_bin_cap - (s + 1)):.4f}",
        )
    )
    ratio = Fraction(ne_count, opt_count) if opt_count else Fraction(0)
    checks.append(
        CheckResult(
            "e_ratio_exact",
            ratio >= lb,
            f"NE/OPT = {ne_count}/{opt_count} = {float(ratio):.6f} vs poa_lower(t, s) = {float(lb):.6f}",
            required=False,
        )
    )
    return ConstructionReport(tuple(checks))


# -- bundle files --------------------------------------------------------------

INSTANCE_FILE = "instance.txt"
OPT_FILE = "opt_packing.json"
NE_FILE = "ne_packing.json"
MANIFEST_FILE = "manifest.json"


def bundle_manifest(bundle: ConstructionBundle) -> dict:
    fixed = poa_family_sizes(bundle.params)
    counts: dict[str, int] = {}
    for lab in bundle.item_labels:
        kind = lab.split("[")[0]
        counts[kind] = counts.get(kind, 0) + 1
    return {
        "format_version": 1,
        "family": "poa",
        "params": bundle.params.to_document(),
        "family_sizes": {k: format_fraction(v) for k, v in sorted(fixed.items())},
        "family_counts": dict(sorted(counts.items())),
        "item_labels": list(bundle.item_labels),
        "ne_bin_phases": list(bundle.ne_bin_phases),
        "opt_bin_levels": list(bundle.opt_bin_levels),
        "notes": list(bundle.notes),
    }


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_bundle(bundle: ConstructionBundle, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        INSTANCE_FILE: serialize_instance(bundle.instance),
        OPT_FILE: bundle.opt_packing.dumps(),
        NE_FILE: bundle.ne_packing.dumps(),
        MANIFEST_FILE: _dump_json(bundle_manifest(bundle)),
    }
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


def read_bundle(in_dir: str | Path) -> ConstructionBundle:
    src = Path(in_dir)
    instance = parse_instance((src / INSTANCE_FILE).read_text())
    opt = Packing.loads_document(instance, (src / OPT_FILE).read_text())
    ne = Packing.loads_document(instance, (src / NE_FILE).read_text())
    manifest = json.loads((src / MANIFEST_FILE).read_text())
    return ConstructionBundle(
        instance,
        opt,
        ne,
        PoAConstructionParams.from_document(manifest["params"]),
        tuple(manifest["item_labels"]),
        tuple(manifest["ne_bin_phases"]),
        tuple(manifest["opt_bin_levels"]),
        tuple(manifest["notes"]),
    )


__all__ = [
    "GeneratorError",
    "graham_epsilon",
    "graham_divisor",
    "gen_graham",
    "graham_chain_packing",
    "parametric_epsilon",
    "parametric_divisor",
    "gen_parametric_ss",
    "parametric_chain_packing",
    "measure_ratio",
    "OptBudgetExceeded",
    "RECURRENCES",
    "MODES",
    "poa_sequences",
    "delta_ladder",
    "PoAConstructionParams",
    "ConstructionBundle",
    "gen_poa_lower",
    "min_valid_n",
    "CheckResult",
    "ConstructionReport",
    "observation21_bounds",
    "recurrence_scale",
    "verify_poa_construction",
    "bundle_manifest",
    "write_bundle",
    "read_bundle",
]
