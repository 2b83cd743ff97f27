"""Command-line front end.

Exit codes: 0 success, 1 untypable / invalid / unsatisfiable / out of
fuel, 2 usage or parse errors.  Results go to stdout, diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from .algebra import AlgebraError, load_signature, numeral_value
from .ea import NealCheckError, check_neal, ea_step, translate_sharp, translate_star
from .eatypes import TypeParseError, parse_type
from .etas import EtasCheckError, check_etas_derivation, measures
from .evaluate import (FuelExhausted, elementary_bounds, instrumented_reduce,
                       normalize)
from .infer import InstantiateError, instantiate, pt
from .linsolve import solve
from .schemes import SchemeSubstitution, scheme_to_str
from .serial import SerialError, etas_from_text, neal_from_text
from .terms import TermParseError, parse_eaterm, parse_term, term_to_str, eaterm_to_str


class _Usage(Exception):
    pass


def _signature(args):
    path = getattr(args, "algebra", None) or os.environ.get("LIGHTLAM_ALGEBRA")
    if not path:
        return None
    with open(path) as fh:
        return load_signature(fh.read())


def _source(args) -> str:
    if args.expr is not None and args.file is not None:
        raise _Usage("give a file or -e, not both")
    if args.expr is not None:
        return args.expr
    if args.file is not None:
        with open(args.file) as fh:
            return fh.read()
    raise _Usage("a file or -e EXPR is required")


def _occ_str(occ) -> str:
    return ".".join(map(str, occ)) if occ else "root"


def _parse_assign(text: str, signature):
    names = {signature.name} if signature is not None else None
    exps: dict[str, int] = {}
    types = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, eq, val = item.partition("=")
        if not eq:
            raise _Usage(f"bad assignment {item!r}, want key=value")
        key, val = key.strip(), val.strip()
        try:
            exps[key] = int(val)
        except ValueError:
            t = parse_type(val, names)
            types[key] = t
            if not key.startswith("'"):
                types["'" + key] = t
    return SchemeSubstitution(types, exps)


def _cmd_infer(args) -> int:
    sig = _signature(args)
    term = parse_term(_source(args), sig)
    p = pt(term, sig)
    if p is None:
        print("untypable", file=sys.stderr)
        return 1
    for x in sorted(p.sigma):
        print(f"CTX {x} : {scheme_to_str(p.sigma[x].scheme)}")
    print(f"RES {scheme_to_str(p.result.scheme)}")
    for c in sorted(p.constraints, key=str):
        print(f"CONSTRAINT {c}")
    S = None
    if args.assign is not None:
        S = _parse_assign(args.assign, sig)
    elif args.solve:
        sol = solve(p.constraints, prefer_small=True)
        if sol is None:
            print("unsatisfiable", file=sys.stderr)
            return 1
        print("ASSIGN " + ", ".join(f"{k}={v}" for k, v in sorted(sol.items())))
        S = SchemeSubstitution({}, sol)
    if S is not None:
        try:
            ctx, tm, ty, d = instantiate(p, S)
        except InstantiateError as e:
            print(f"instantiation failed: {e}", file=sys.stderr)
            return 1
        check_etas_derivation(d, sig)
        print(f"JUDGEMENT {d.conclusion()}")
    return 0


def _cmd_check(args) -> int:
    sig = _signature(args)
    with open(args.file) as fh:
        text = fh.read()
    if args.etas:
        d = etas_from_text(text, sig)
        try:
            check_etas_derivation(d, sig)
        except EtasCheckError as e:
            print(f"invalid: {e}", file=sys.stderr)
            return 1
    else:
        d = neal_from_text(text, sig)
        try:
            check_neal(d)
        except NealCheckError as e:
            print(f"invalid: {e}", file=sys.stderr)
            return 1
    print(f"ok {d.conclusion()}")
    return 0


def _cmd_eval(args) -> int:
    sig = _signature(args)
    term = parse_term(_source(args), sig)
    try:
        nf, trace = normalize(term, args.strategy, args.max_steps, sig)
    except FuelExhausted as e:
        for i, s in enumerate(e.trace.steps):
            if args.trace:
                print(f"[{i}] redex={_occ_str(s.occurrence)} {term_to_str(s.term)}")
        print(f"out of fuel after {len(e.trace)} steps", file=sys.stderr)
        return 1
    if args.trace:
        for i, s in enumerate(trace.steps):
            print(f"[{i}] redex={_occ_str(s.occurrence)} {term_to_str(s.term)}")
    print(f"STEPS {len(trace)}")
    print(f"NORMAL {term_to_str(nf)}")
    if args.numerals:
        n = numeral_value(nf)
        if n is not None:
            print(f"NUMERAL {n}")
    return 0


def _cmd_bounds(args) -> int:
    sig = _signature(args)
    term = parse_term(_source(args), sig)
    p = pt(term, sig)
    if p is None:
        print("untypable", file=sys.stderr)
        return 1
    sol = solve(p.constraints, prefer_small=True)
    if sol is None:
        print("unsatisfiable", file=sys.stderr)
        return 1
    ctx, tm, ty, d = instantiate(p, SchemeSubstitution({}, sol))
    prof = measures(d)
    print(f"JUDGEMENT {d.conclusion()}")
    print(f"SIZES {list(prof.sizes)}")
    try:
        run = instrumented_reduce(d, args.max_steps, sig)
    except FuelExhausted as e:
        print(f"out of fuel after {len(e.trace)} steps", file=sys.stderr)
        return 1
    for i, s in enumerate(run.trace.steps):
        print(f"[{i}] level={s.level} redex={_occ_str(s.occurrence)} "
              f"sizes={list(s.profile.sizes)}")
    print(f"NORMAL {term_to_str(run.derivation.subject)}")
    table = elementary_bounds(prof.level, prof.total)
    for e in range(len(table.f)):
        print(f"BOUND depth={e} steps<=" + _big(table.g[e])
              + " size<=" + _big(table.f[e]))
    if run.violations:
        for v in run.violations:
            print(f"VIOLATION {v}", file=sys.stderr)
        return 1
    print("CHECK all size inequalities held")
    return 0


def _big(x) -> str:
    if x == float("inf"):
        return "astronomical"
    if isinstance(x, int) and x.bit_length() > 64:
        return f"~2^{x.bit_length() - 1}"
    return str(x)


def _cmd_translate(args) -> int:
    t = parse_eaterm(_source(args))
    out = translate_sharp(t) if args.sharp else translate_star(t)
    print(term_to_str(out))
    return 0


def _cmd_ea_step(args) -> int:
    t = parse_eaterm(_source(args))
    steps = ea_step(t)
    if not steps:
        print("normal")
        return 0
    for rule, reduct in steps if args.all else steps[:1]:
        print(f"STEP {rule} {eaterm_to_str(reduct)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="lightlam")
    sub = top.add_subparsers(dest="cmd", required=True)

    def io(sp, algebra=True):
        sp.add_argument("file", nargs="?", default=None)
        sp.add_argument("-e", "--expr", default=None)
        if algebra:
            sp.add_argument("--algebra", default=None)

    p = sub.add_parser("infer", help="principal typing of a term")
    io(p)
    p.add_argument("--solve", action="store_true")
    p.add_argument("--assign", default=None)
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("check", help="validate a serialized derivation")
    p.add_argument("file")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--etas", action="store_true")
    kind.add_argument("--neal", action="store_true")
    p.add_argument("--algebra", default=None)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("eval", help="normalize a term")
    io(p)
    p.add_argument("--strategy", choices=("cbv", "cbn"), required=True)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--numerals", action="store_true")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("bounds", help="instrumented run with size bounds")
    io(p)
    p.add_argument("--max-steps", type=int, default=500)
    p.set_defaults(fn=_cmd_bounds)

    p = sub.add_parser("translate", help="read back a sharing term")
    io(p, algebra=False)
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--sharp", action="store_true")
    kind.add_argument("--star", action="store_true")
    p.set_defaults(fn=_cmd_translate)

    p = sub.add_parser("ea-step", help="sharing-calculus reducts")
    io(p, algebra=False)
    p.add_argument("--all", action="store_true")
    p.set_defaults(fn=_cmd_ea_step)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _Usage as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (TermParseError, TypeParseError, SerialError, AlgebraError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(str(e), file=sys.stderr)
        return 2
    except (EtasCheckError, NealCheckError) as e:
        print(f"invalid: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
