import random
import re
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from selfish_packing.core import Instance, Packing

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PAPER = Path(__file__).resolve().parent.parent / "paper.md"

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")


def _parse_table() -> dict[int, dict[str, object]]:
    rows = {}
    for line in PAPER.read_text().splitlines():
        m = re.match(r"\s*\$t=(\d+)\$\s*&(.*)\\\\", line)
        if not m:
            continue
        cells = [re.sub(r"\\cite\{[^}]*\}", "", c).strip() for c in m.group(2).split("&")]
        lo, hi = re.findall(r"\d+\.\d+", cells[4])
        rows[int(m.group(1))] = {
            "ffd": cells[0],
            "cp_lb": cells[1],
            "r_ss": cells[2],
            "cp_ub": cells[3],
            "poa_lb": lo,
            "poa_ub": hi,
            "ff": cells[5],
        }
    return rows


@pytest.fixture(scope="session")
def paper_table():
    if not PAPER.exists():
        pytest.skip("paper.md not available")
    rows = _parse_table()
    assert sorted(rows) == list(range(1, 11))
    return rows


def random_sizes(rng: random.Random, n: int, alpha: Fraction = Fraction(1), max_den: int = 60) -> list[Fraction]:
    out = []
    while len(out) < n:
        d = rng.randint(1, max_den)
        x = Fraction(rng.randint(1, d), d)
        if x <= alpha:
            out.append(x)
    return out


def random_instance(rng: random.Random, n: int, alpha: Fraction = Fraction(1), max_den: int = 60) -> Instance:
    return Instance.from_sizes(random_sizes(rng, n, alpha, max_den), alpha)


def singletons(instance: Instance) -> Packing:
    return Packing.from_bins(instance, [[item.id] for item in instance.items])


@st.composite
def sizes_st(draw, min_n=1, max_n=8, alpha=Fraction(1), max_den=24):
    n = draw(st.integers(min_n, max_n))
    out = []
    for _ in range(n):
        d = draw(st.integers(1, max_den))
        hi = int(alpha * d)
        if hi < 1:
            d = alpha.denominator
            hi = alpha.numerator
        out.append(Fraction(draw(st.integers(1, hi)), d))
    return out


@st.composite
def instances_st(draw, min_n=1, max_n=8, alpha=Fraction(1), max_den=24):
    return Instance.from_sizes(draw(sizes_st(min_n, max_n, alpha, max_den)), alpha)


@st.composite
def packings_st(draw, min_n=1, max_n=8, alpha=Fraction(1), max_den=24):
    """A random valid packing: items placed in random order by a random-fit rule."""
    inst = draw(instances_st(min_n, max_n, alpha, max_den))
    order = draw(st.permutations([it.id for it in inst.items]))
    bins: list[list[int]] = []
    loads: list[Fraction] = []
    for i in order:
        s = inst.size_of(i)
        fits = [k for k, x in enumerate(loads) if x + s <= 1]
        choice = draw(st.sampled_from(fits + [None]))
        if choice is None:
            bins.append([i])
            loads.append(s)
        else:
            bins[choice].append(i)
            loads[choice] += s
    return Packing.from_bins(inst, bins)
