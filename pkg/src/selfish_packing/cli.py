"""Command-line front end.

Exit status: 0 success, 1 a check failed, 2 usage/parse/I-O error, 3 a
search budget ran out.  Artifacts go to files or stdout, diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import __version__
from .audit import (
    SPECIAL_RULES,
    AuditError,
    audit_vs_opt,
    claim40_check,
    claim41_check,
    claim50_check,
    classify_groups,
    group_counts_csv,
    poa_weight_audit,
    ss_weights,
)
from .bounds import (
    ROUNDING_MODES,
    format_decimal,
    lambda_limit,
    lambda_r,
    lambda_t,
    poa_lower,
    poa_upper,
    results_table_csv,
)
from .core import (
    PACKING_FORMAT_VERSION,
    InstanceFormatError,
    Packing,
    PackingError,
    format_fraction,
    parse_fraction,
    parse_instance,
    serialize_instance,
    validate_packing,
)
from .game import (
    POLICIES,
    best_response_dynamics,
    find_improving_move,
    is_strong_nash_direct,
    is_strong_nash_via_ss,
    ss_pack,
)
from .generators import (
    MODES,
    RECURRENCES,
    GeneratorError,
    gen_graham,
    gen_parametric_ss,
    gen_poa_lower,
    read_bundle,
    verify_poa_construction,
    write_bundle,
)
from .solver import OptBudgetExceeded, first_fit, first_fit_decreasing, opt_pack

OK, FAILED, USAGE, BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"selfish-packing: {msg}", file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _load_instance(path: str):
    return parse_instance(_read(path))


def _load_packing(instance, path: str) -> Packing:
    try:
        packing = Packing.loads_document(instance, _read(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    problems = validate_packing(packing)
    if problems:
        raise UsageError(f"{path}: packing does not match the instance: {problems[0]}")
    return packing


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def _default_t(instance) -> int:
    biggest = max(instance.sizes, default=Fraction(1))
    return max(1, biggest.denominator // biggest.numerator)


# -- pack ---------------------------------------------------------------------


def cmd_pack(args) -> int:
    instance = _load_instance(args.infile)
    trace = None
    if args.algo == "ss":
        packing, trace = ss_pack(instance)
    elif args.algo == "ff":
        packing = first_fit(instance)
    elif args.algo == "ffd":
        packing = first_fit_decreasing(instance)
    else:
        try:
            packing = opt_pack(instance, budget=args.budget)
        except OptBudgetExceeded as exc:
            _err(f"{exc}")
            return BUDGET
    _write(args.out, packing.dumps())
    if args.trace:
        if trace is None:
            raise UsageError("--trace is only available with --algo ss")
        _write(args.trace, _dump_json(trace.to_document(instance)))
    print(f"{args.algo}: {len(packing)} bins for {len(instance)} items")
    return OK


# -- check --------------------------------------------------------------------


def cmd_check(args) -> int:
    instance = _load_instance(args.infile)
    packing = _load_packing(instance, args.packing)
    if args.kind == "ne":
        move = find_improving_move(packing)
        if move is not None:
            print(f"not a Nash equilibrium: {move.describe()}")
            return FAILED
        print("Nash equilibrium")
        return OK
    if args.kind == "sne-ss":
        if is_strong_nash_via_ss(packing):
            print("strong Nash equilibrium")
            return OK
        print("not a strong Nash equilibrium")
        return FAILED
    result = is_strong_nash_direct(packing, max_coalition=args.max_coalition, budget=args.budget)
    if result.inconclusive:
        _err("coalition search budget exhausted")
        return BUDGET
    if result.stable:
        cap = "full" if args.max_coalition is None else str(args.max_coalition)
        print(f"strong Nash equilibrium (coalitions up to {cap})")
        return OK
    print(f"not a strong Nash equilibrium: {result.witness.describe()}")
    return FAILED


# -- gen ----------------------------------------------------------------------


def _need(args, *names: str) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"family {args.family} needs {' '.join(missing)}")


def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc.strerror}") from None
    if args.family == "graham":
        _need(args, "r", "N")
        instance = gen_graham(args.r, args.N, strict=args.strict)
    elif args.family == "param":
        _need(args, "t", "r", "N")
        instance = gen_parametric_ss(args.t, args.r, args.N)
    else:
        _need(args, "t", "s", "n")
        bundle = gen_poa_lower(args.t, args.s, args.n, mode=args.mode, recurrence=args.recurrence)
        paths = write_bundle(bundle, out)
        print(
            f"poa: {len(bundle.instance)} items, NE {len(bundle.ne_packing)} bins, "
            f"OPT {len(bundle.opt_packing)} bins; wrote {len(paths)} files to {out}"
        )
        for note in bundle.notes:
            _err(f"note: {note}")
        return OK
    _write(str(out / "instance.txt"), serialize_instance(instance))
    print(f"{args.family}: {len(instance)} items written to {out / 'instance.txt'}")
    return OK


# -- audit --------------------------------------------------------------------


def cmd_audit(args) -> int:
    if args.kind == "construction":
        if not args.bundle:
            raise UsageError("--kind construction needs --bundle DIR")
        try:
            bundle = read_bundle(args.bundle)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read bundle {args.bundle}: {exc}") from None
        report = verify_poa_construction(bundle)
        _emit(_dump_json(report.to_document()), args.report)
        for c in report.checks:
            if not c.required:
                _err(f"note: {c.name}: {c.detail}")
        for c in report.checks:
            if c.required and not c.passed:
                _err(f"failed: {c.name}: {c.detail}")
        print(f"construction audit: {'pass' if report.passed else 'fail'}", file=sys.stderr)
        return OK if report.passed else FAILED

    if not args.infile:
        raise UsageError(f"--kind {args.kind} needs --in FILE")
    instance = _load_instance(args.infile)
    if args.opt:
        opt = _load_packing(instance, args.opt)
    else:
        try:
            opt = opt_pack(instance, budget=args.budget)
        except OptBudgetExceeded as exc:
            _err(str(exc))
            return BUDGET

    if args.kind == "ss":
        _, trace = ss_pack(instance)
        assignment = ss_weights(trace, instance, args.t)
        _, report = audit_vs_opt(assignment, opt)
        docs = [report.to_document()]
        passed = report.passed
    else:
        if not args.ne:
            raise UsageError("--kind poa needs --ne FILE")
        ne = _load_packing(instance, args.ne)
        t = args.t if args.t is not None else _default_t(instance)
        reports = [
            claim40_check(ne, t),
            claim41_check(ne, t),
            claim50_check(ne, opt, t),
            poa_weight_audit(ne, opt, t, special=args.special),
        ]
        docs = [r.to_document() for r in reports]
        passed = all(r.passed for r in reports)
        if args.groups_csv:
            try:
                cls = classify_groups(ne, t)
            except AuditError as exc:
                _err(f"no group counts: {exc}")
            else:
                _write(args.groups_csv, group_counts_csv([(Path(args.ne).stem, cls)]))
    doc = {"passed": passed, "reports": docs}
    _emit(_dump_json(doc), args.report)
    print(f"{args.kind} audit: {'pass' if passed else 'fail'}", file=sys.stderr)
    return OK if passed else FAILED


# -- bounds -------------------------------------------------------------------


def cmd_bounds(args) -> int:
    tol = parse_fraction(args.tolerance)
    if args.table:
        sys.stdout.write(results_table_csv(args.max_t, rounding=args.rounding))
    elif args.lambda_r is not None:
        if args.lambda_r < 1:
            raise UsageError("--lambda needs R >= 1")
        x = lambda_r(args.lambda_r)
        print(f"lambda_{args.lambda_r} = {format_fraction(x)} ~ {format_decimal(x)}")
    elif args.lambda_limit:
        iv = lambda_limit(tol)
        print(f"lambda in [{format_decimal(iv.lower)}, {format_decimal(iv.upper)}]")
    elif args.lambda_t is not None:
        if args.lambda_t < 1:
            raise UsageError("--lambda-t needs T >= 1")
        iv = lambda_t(args.lambda_t, tol)
        print(f"lambda^{args.lambda_t} in [{format_decimal(iv.lower)}, {format_decimal(iv.upper)}]")
    else:
        t = args.poa
        if t < 2:
            raise UsageError("--poa needs T >= 2")
        up = poa_upper(t)
        lo = poa_lower(t)
        print(f"poa_upper({t}) = {format_fraction(up)} ~ {format_decimal(up)}")
        print(f"poa_lower({t}) ~ {format_decimal(lo)}")
    return OK


# -- dynamics -----------------------------------------------------------------


def cmd_dynamics(args) -> int:
    instance = _load_instance(args.infile)
    if args.start == "singletons":
        start = Packing.from_bins(instance, [[item.id] for item in instance.items])
    elif args.start == "ff":
        start = first_fit(instance)
    else:
        if not args.packing:
            raise UsageError("--start given needs --packing FILE")
        start = _load_packing(instance, args.packing)
    moves: list = []
    result = best_response_dynamics(
        start, policy=args.policy, seed=args.seed, log=moves, max_steps=args.max_steps
    )
    if args.log:
        _write(args.log, "".join(m.describe() + "\n" for m in moves))
    if args.out:
        _write(args.out, result.packing.dumps())
    print(f"dynamics: {result.steps} steps, {len(start)} -> {len(result.packing)} bins")
    return OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfish-packing",
        description="Subset Sum packing, bin packing equilibria and their bounds.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"selfish-packing {__version__} (packing format {PACKING_FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pack", help="pack an instance")
    p.add_argument("--algo", choices=("ss", "ff", "ffd", "opt"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--budget", type=int, default=200_000)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("check", help="check a packing for equilibrium properties")
    p.add_argument("--kind", choices=("ne", "sne-direct", "sne-ss"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--packing", required=True)
    p.add_argument("--max-coalition", type=int)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a lower-bound family")
    p.add_argument("--family", choices=("graham", "param", "poa"), required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--strict", action="store_true", help="graham: also require 2^(r-1) | N")
    p.add_argument("--mode", choices=MODES, default="exact")
    p.add_argument("--recurrence", choices=RECURRENCES, default="printed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("audit", help="audit a weighting argument or a construction")
    p.add_argument("--kind", choices=("ss", "poa", "construction"), required=True)
    p.add_argument("--in", dest="infile")
    p.add_argument("--opt", help="optimal packing (computed when omitted)")
    p.add_argument("--ne", help="equilibrium packing (poa)")
    p.add_argument("--t", type=int)
    p.add_argument("--special", choices=SPECIAL_RULES, default="positional")
    p.add_argument("--bundle", help="construction bundle directory")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--groups-csv")
    p.add_argument("--budget", type=int, default=1_000_000)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bounds", help="evaluate the closed-form bounds")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", action="store_true")
    g.add_argument("--lambda", dest="lambda_r", type=int, metavar="R")
    g.add_argument("--lambda-limit", action="store_true")
    g.add_argument("--lambda-t", type=int, metavar="T")
    g.add_argument("--poa", type=int, metavar="T")
    p.add_argument("--max-t", type=int, default=10)
    p.add_argument("--rounding", choices=ROUNDING_MODES, default="half-even")
    p.add_argument("--tolerance", default="1/1000000")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("dynamics", help="run best-response dynamics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--start", choices=("singletons", "ff", "given"), default="singletons")
    p.add_argument("--packing")
    p.add_argument("--policy", choices=POLICIES, default="first")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log")
    p.add_argument("--out")
    p.add_argument("--max-steps", type=int, default=10**6)
    p.set_defaults(func=cmd_dynamics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace], int] = args.func
    try:
        return handler(args)
    except UsageError as exc:
        _err(str(exc))
    except (InstanceFormatError, PackingError, GeneratorError, AuditError) as exc:
        _err(str(exc))
    return USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
