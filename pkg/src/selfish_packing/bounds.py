"""Closed-form ratios and the mathematical programs behind the SS analysis.

Series limits come back as :class:`BoundInterval` objects: an exact partial
sum plus a closed-form bound on the tail.  Only :func:`mp_bruteforce` uses
floating point, and it re-scores its final answer exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class SizeVector:
    """Decision variables s_1..s_r of the (parametric) program."""

    sizes: tuple[Fraction, ...]
    t: int | None = None

    def __post_init__(self) -> None:
        sizes = tuple(Fraction(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if any(s < 0 for s in sizes):
            raise ValueError("sizes must be non-negative")
        if sum(sizes, ZERO) > 1:
            raise ValueError("sizes must sum to at most 1")
        if self.t is not None:
            if self.t < 1:
                raise ValueError("t must be a positive integer")
            cap = Fraction(1, self.t)
            if any(s > cap for s in sizes[:-1]):
                raise ValueError(f"s_i must be at most 1/{self.t} for i < r")


@dataclass(frozen=True)
class BoundInterval:
    lower: Fraction
    upper: Fraction

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("empty interval")

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def midpoint(self) -> Fraction:
        return (self.lower + self.upper) / 2

    def contains(self, x, tol=ZERO) -> bool:
        x, tol = Fraction(x), Fraction(tol)
        return self.lower - tol <= x <= self.upper + tol


def _as_vector(v: SizeVector | Sequence, t: int | None) -> SizeVector:
    return v if isinstance(v, SizeVector) else SizeVector(tuple(v), t)


def mp_objective(v: SizeVector | Sequence, t: int | None = None) -> Fraction:
    """Value of the program's objective at ``v``.

    Term i is s_i / max{s_1+..+s_i, 1 - min_{j<=i} s_j}, with t/(t+1) as a
    third candidate in the max for the parametric program.
    """
    v = _as_vector(v, t)
    floor = Fraction(v.t, v.t + 1) if v.t is not None else ZERO
    total = ZERO
    prefix = ZERO
    smallest = None
    for s in v.sizes:
        prefix += s
        smallest = s if smallest is None else min(smallest, s)
        total += s / max(prefix, 1 - smallest, floor)
    return total


def lambda_r(r: int) -> Fraction:
    """Optimal value of the plain program with r variables."""
    if r < 1:
        raise ValueError("r must be at least 1")
    return sum((Fraction(1, 2**i - 1) for i in range(1, r)), ZERO) + Fraction(1, 2 ** (r - 1))


def halving_vector(r: int) -> tuple[Fraction, ...]:
    """The maximizer (1/2, 1/4, ..., 1/2^(r-1), 1/2^(r-1))."""
    if r < 1:
        raise ValueError("r must be at least 1")
    if r == 1:
        return (ONE,)
    return tuple(Fraction(1, 2**i) for i in range(1, r)) + (Fraction(1, 2 ** (r - 1)),)


def _terms_for(tolerance: Fraction, scale: Fraction) -> int:
    # smallest k with scale / 2^k <= tolerance
    k = 0
    while scale / 2**k > tolerance:
        k += 1
    return k


def lambda_limit(tolerance=Fraction(1, 10**6)) -> BoundInterval:
    """Certified enclosure of the sum over i >= 1 of 1/(2^i - 1).

    After k terms the tail lies in [2^-k, 2^(1-k)] (compare with the
    geometric series of 1/2^i and of 2/2^i).
    """
    tolerance = Fraction(tolerance)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    k = max(1, _terms_for(tolerance, Fraction(2)))
    partial = sum((Fraction(1, 2**i - 1) for i in range(1, k + 1)), ZERO)
    return BoundInterval(partial + Fraction(1, 2**k), partial + Fraction(2, 2**k))


def lambda_t(t: int, tolerance=Fraction(1, 10**6)) -> BoundInterval:
    """Certified enclosure of 1 + sum over i >= 1 of 1/((t+1) 2^i - 1).

    For t = 1 this is the plain limit and the same interval is returned.
    After k terms the tail lies in [1/((t+1) 2^k), 2/((t+1) 2^k)].
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if t == 1:
        return lambda_limit(tolerance)
    tolerance = Fraction(tolerance)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    k = max(1, _terms_for(tolerance, Fraction(2, t + 1)))
    partial = 1 + sum((Fraction(1, (t + 1) * 2**i - 1) for i in range(1, k + 1)), ZERO)
    return BoundInterval(partial + Fraction(1, (t + 1) * 2**k), partial + Fraction(2, (t + 1) * 2**k))


def _check_x(t: int, x: Fraction) -> None:
    if t < 2:
        raise ValueError("t must be at least 2")
    if not Fraction(1, t + 1) <= x <= Fraction(1, t):
        raise ValueError(f"x must lie in [1/{t + 1}, 1/{t}]")


def lambda_t_r_x(t: int, r: int, x) -> Fraction:
    """Objective value of the one-parameter family of parametric solutions."""
    x = Fraction(x)
    _check_x(t, x)
    if r < t:
        raise ValueError("r must be at least t")
    y = 1 - (t - 1) * x
    value = x * (t - 1) * Fraction(t + 1, t)
    for i in range(1, r - t + 1):
        value += 1 / (2**i / y - 1)
    return value + y / 2 ** (r - t)


def parametric_optimizer_vector(t: int, r: int, x) -> tuple[Fraction, ...]:
    """The solution whose value is :func:`lambda_t_r_x`: t-1 copies of x, then halving."""
    x = Fraction(x)
    _check_x(t, x)
    if r < t:
        raise ValueError("r must be at least t")
    y = 1 - (t - 1) * x
    head = [x] * (t - 1)
    mid = [y / 2 ** (i - t + 1) for i in range(t, r)]
    return tuple(head + mid + [y / 2 ** (r - t)])


def lambda_t_x(t: int, x, terms: int = 60) -> BoundInterval:
    """Certified enclosure of the r -> infinity limit of :func:`lambda_t_r_x`.

    With y = 1 - (t-1)x <= 1 every term 1/(2^i/y - 1) is at most 2y/2^i, so
    the tail after k terms is at most 2y/2^k.
    """
    x = Fraction(x)
    _check_x(t, x)
    y = 1 - (t - 1) * x
    partial = x * (t - 1) * Fraction(t + 1, t)
    for i in range(1, terms + 1):
        partial += 1 / (2**i / y - 1)
    return BoundInterval(partial, partial + 2 * y / 2**terms)


def lambda_t_x_argmax_check(t: int, grid: int = 50, terms: int = 60) -> bool:
    """True iff the left endpoint 1/(t+1) beats every other grid point.

    The comparison is certified: the lower end of the enclosure at 1/(t+1)
    must exceed the upper end of the enclosure at each other grid point.
    """
    if grid < 10:
        raise ValueError("grid must be at least 10")
    left, right = Fraction(1, t + 1), Fraction(1, t)
    step = (right - left) / grid
    best = lambda_t_x(t, left, terms).lower
    return all(lambda_t_x(t, left + j * step, terms).upper < best for j in range(1, grid + 1))


def lambda_t_x_endpoint_gap(t: int, terms: int = 60) -> BoundInterval:
    """Enclosure of lambda^t(1/(t+1)) - lambda^t(1/t)."""
    a = lambda_t_x(t, Fraction(1, t + 1), terms)
    b = lambda_t_x(t, Fraction(1, t), terms)
    return BoundInterval(a.lower - b.upper, a.upper - b.lower)


# -- brute force over the programs ---------------------------------------------


def _objective_np(s: np.ndarray, floor: float) -> np.ndarray:
    """Vectorized objective; ``s`` has shape (m, r)."""
    prefix = np.cumsum(s, axis=1)
    smallest = np.minimum.accumulate(s, axis=1)
    denom = np.maximum(np.maximum(prefix, 1.0 - smallest), floor)
    return (s / denom).sum(axis=1)


def _grid_points(r: int, grid: int, caps: Sequence[int]) -> Iterable[np.ndarray]:
    """Integer points k with sum <= grid and k_i <= caps[i], in chunks.

    The first r-2 coordinates are looped over; the last two are a vectorized
    triangle.
    """
    a, b = np.meshgrid(np.arange(grid + 1), np.arange(grid + 1), indexing="ij")
    a, b = a.ravel(), b.ravel()
    ok = (a <= caps[-2]) & (b <= caps[-1]) if r >= 2 else None

    def rec(prefix: list[int], used: int):
        if len(prefix) == r - 2:
            room = grid - used
            mask = ok & (a + b <= room)
            tail = np.stack([a[mask], b[mask]], axis=1)
            head = np.broadcast_to(np.array(prefix, dtype=np.int64), (len(tail), len(prefix)))
            yield np.concatenate([head, tail], axis=1)
            return
        i = len(prefix)
        for k in range(min(caps[i], grid - used) + 1):
            yield from rec(prefix + [k], used + k)

    if r == 1:
        yield np.arange(min(caps[0], grid) + 1).reshape(-1, 1)
    else:
        yield from rec([], 0)


def _feasible(v: list[Fraction], cap: Fraction | None) -> bool:
    if any(s < 0 for s in v) or sum(v, ZERO) > 1:
        return False
    return cap is None or all(s <= cap for s in v[:-1])


def _refine(v: list[Fraction], t: int | None, step: Fraction, rounds: int) -> list[Fraction]:
    """Deterministic coordinate ascent with step halving, exact arithmetic.

    Moves: add or remove ``step`` on one coordinate, or shift ``step`` from
    one coordinate to another.  A round keeps the first strictly improving
    move found in a fixed scan order and halves the step when none improves.
    """
    cap = Fraction(1, t) if t is not None else None
    r = len(v)
    best = mp_objective(SizeVector(tuple(v), t))
    for _ in range(rounds):
        improved = False
        for i in range(r):
            for j in range(-1, r):
                if j == i:
                    continue
                for sign in (1, -1):
                    w = list(v)
                    w[i] += sign * step
                    if j >= 0:
                        w[j] -= sign * step
                    if not _feasible(w, cap):
                        continue
                    val = mp_objective(SizeVector(tuple(w), t))
                    if val > best:
                        v, best, improved = w, val, True
        if not improved:
            step /= 2
    return v


def mp_bruteforce(
    r: int, t: int | None = None, grid: int = 200, refine_rounds: int = 40
) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Best objective over the grid {k/grid} on the feasible simplex, refined.

    Returns the exact objective value of the final vector and the vector.
    Ties on the grid go to the lexicographically smallest point.
    """
    if not 1 <= r <= 4:
        raise ValueError("r must be between 1 and 4")
    if grid < 1:
        raise ValueError("grid must be positive")
    if t is not None and t < 1:
        raise ValueError("t must be positive")
    floor = t / (t + 1) if t is not None else 0.0
    lim = grid if t is None else grid // t
    caps = [lim] * (r - 1) + [grid]
    best_val = -1.0
    best_k = None
    for pts in _grid_points(r, grid, caps):
        if len(pts) == 0:
            continue
        vals = _objective_np(pts / grid, floor)
        idx = int(np.argmax(vals))
        if vals[idx] > best_val + 1e-12:
            best_val = float(vals[idx])
            best_k = pts[idx]
    v = [Fraction(int(k), grid) for k in best_k]
    v = _refine(v, t, Fraction(1, 2 * grid), refine_rounds)
    vec = tuple(v)
    return mp_objective(SizeVector(vec, t)), vec


# -- price of anarchy and friends ----------------------------------------------


def poa_upper(t: int) -> Fraction:
    """Upper bound (2t^3 + t^2 + 2)/((2t+1)(t^2 - t + 1)) on the PoA for sizes <= 1/t."""
    if t < 2:
        raise ValueError("t must be at least 2")
    return Fraction(2 * t**3 + t**2 + 2, (2 * t + 1) * (t**2 - t + 1))


def poa_lower(t: int, terms: int = 50) -> Fraction:
    """Partial sum (t^2 + sum_{j<=terms} (t+1)^-j 2^-(j(j-1)/2)) / (t(t-1)+1)."""
    if t < 1:
        raise ValueError("t must be positive")
    if terms < 1:
        raise ValueError("terms must be at least 1")
    series = sum(
        (Fraction(1, (t + 1) ** j * 2 ** (j * (j - 1) // 2)) for j in range(1, terms + 1)), ZERO
    )
    return (t**2 + series) / (t * (t - 1) + 1)


def ff_ratio(t: int) -> Fraction:
    """Asymptotic First Fit ratio: 17/10 for t = 1, (t+1)/t otherwise."""
    if t < 1:
        raise ValueError("t must be positive")
    return Fraction(17, 10) if t == 1 else Fraction(t + 1, t)


# Reference columns of the comparison table that come from prior work and are
# stored, not derived: FFD ratio, Caprara-Pferschy lower/upper bounds, and the
# t = 1 PoA upper bound (the PoA formula above only applies for t >= 2).
REFERENCE_COLUMNS: dict[int, dict[str, str]] = {
    1: {"ffd_ref": "1.222222", "cp_lb_ref": "1.606695", "cp_ub_ref": "1.621015", "poa_ub": "1.642857"},
    2: {"ffd_ref": "1.183333", "cp_lb_ref": "1.364307", "cp_ub_ref": "1.398793"},
    3: {"ffd_ref": "1.166667", "cp_lb_ref": "1.263293", "cp_ub_ref": "1.287682"},
    4: {"ffd_ref": "1.150000", "cp_lb_ref": "1.206935", "cp_ub_ref": "1.223143"},
    5: {"ffd_ref": "1.138095", "cp_lb_ref": "1.170745", "cp_ub_ref": "1.182321"},
    6: {"ffd_ref": "1.119048", "cp_lb_ref": "1.145460", "cp_ub_ref": "1.154150"},
    7: {"ffd_ref": "1.109127", "cp_lb_ref": "1.126763", "cp_ub_ref": "1.133531"},
    8: {"ffd_ref": "1.097222", "cp_lb_ref": "1.112360", "cp_ub_ref": "1.117783"},
    9: {"ffd_ref": "1.089899", "cp_lb_ref": "1.100918", "cp_ub_ref": "1.105360"},
    10: {"ffd_ref": "1.081818", "cp_lb_ref": "1.091603", "cp_ub_ref": "1.095310"},
}

TABLE_HEADER = ("t", "ffd_ref", "cp_lb_ref", "r_ss", "cp_ub_ref", "poa_lb", "poa_ub", "ff")


ROUNDING_MODES = ("half-even", "down")


def format_decimal(x: Fraction, digits: int = 6, rounding: str = "half-even") -> str:
    """Exact decimal rendering with ``digits`` fractional digits.

    ``rounding`` is ``"half-even"`` or ``"down"`` (truncation toward zero,
    which is how the published comparison table was produced).
    """
    x = Fraction(x)
    if rounding == "half-even":
        q = round(x, digits)
    elif rounding == "down":
        q = Fraction(int(x * 10**digits), 10**digits)
    else:
        raise ValueError(f"unknown rounding {rounding!r}")
    sign = "-" if q < 0 else ""
    q = abs(q)
    scaled = q.numerator * 10**digits // q.denominator
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def results_table(max_t: int = 10, rounding: str = "half-even") -> list[dict[str, str]]:
    """Rows t = 1..max_t of the comparison table as 6-digit decimal strings."""
    fmt = lambda x: format_decimal(x, 6, rounding)  # noqa: E731
    rows = []
    for t in range(1, max_t + 1):
        ref = REFERENCE_COLUMNS.get(t, {})
        rss = lambda_t(t, Fraction(1, 10**12)).midpoint
        poa_ub = ref["poa_ub"] if "poa_ub" in ref else fmt(poa_upper(t))
        rows.append(
            {
                "t": str(t),
                "ffd_ref": ref.get("ffd_ref", ""),
                "cp_lb_ref": ref.get("cp_lb_ref", ""),
                "r_ss": fmt(rss),
                "cp_ub_ref": ref.get("cp_ub_ref", ""),
                "poa_lb": fmt(poa_lower(t, 50)),
                "poa_ub": poa_ub,
                "ff": fmt(ff_ratio(t)),
            }
        )
    return rows


def results_table_csv(max_t: int = 10, rounding: str = "half-even") -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(results_table(max_t, rounding))
    return buf.getvalue()


__all__ = [
    "SizeVector",
    "BoundInterval",
    "mp_objective",
    "lambda_r",
    "halving_vector",
    "lambda_limit",
    "lambda_t",
    "lambda_t_r_x",
    "parametric_optimizer_vector",
    "lambda_t_x",
    "lambda_t_x_argmax_check",
    "lambda_t_x_endpoint_gap",
    "mp_bruteforce",
    "poa_upper",
    "poa_lower",
    "ff_ratio",
    "REFERENCE_COLUMNS",
    "TABLE_HEADER",
    "ROUNDING_MODES",
    "format_decimal",
    "results_table",
    "results_table_csv",
]
