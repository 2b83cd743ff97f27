"""Reduction strategies, traced normalization, instrumented runs, bounds.

Terms step under call-by-value or call-by-name; both are weak by default
(no reduction under binders) and deterministic.  Instrumented runs step a
derivation instead, recording the rewrite level and the per-level size
profile after every step and checking the expected inequalities between
consecutive profiles.  Bound tables evaluate the elementary recurrences
that cap step counts and intermediate sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .etas import (ContextTriple, EtasCheckError, EtasDerivation,
                   LevelProfile, check_etas_derivation, is_typing, measures,
                   reduce_derivation)
from .eatypes import TBang
from .terms import (Abs, App, Const, Occurrence, Term, is_value, replace_at,
                    substitute, subterm_at, term_to_str)


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class TraceStep:
    strategy: str
    occurrence: Occurrence
    level: int | None
    term: Term
    profile: LevelProfile | None


@dataclass(frozen=True)
class Trace:
    initial: Term
    steps: tuple[TraceStep, ...]

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> Term:
        return self.steps[-1].term if self.steps else self.initial


class FuelExhausted(EvalError):
    def __init__(self, term: Term, trace: Trace):
        super().__init__(f"out of fuel after {len(trace)} steps at "
                         f"{term_to_str(term)}")
        self.term = term
        self.trace = trace


# ------------------------------------------------------------ strategies

def step(m: Term, strategy: str, signature=None,
         strong: bool = False) -> tuple[Occurrence, Term] | None:
    """One deterministic reduction step, or None on a normal form.

    cbv fires the leftmost-outermost beta redex whose argument is a
    value, evaluating operands left to right; cbn fires the
    leftmost-outermost beta redex outright.  Constant rules fire before
    beta at the same node.  Weak unless strong is set, in which case
    the search also enters binder bodies.
    """
    if strategy not in ("cbv", "cbn"):
        raise EvalError(f"unknown strategy {strategy!r}")
    hit = _find(m, strategy, signature, strong, ())
    if hit is None:
        return None
    occ, local = hit
    return occ, replace_at(m, occ, local)


def _find(t, strat, sig, strong, path):
    if isinstance(t, App):
        if sig is not None:
            d = sig.delta_step(t)
            if d is not None:
                return path, d
        if isinstance(t.fn, Abs) and (strat == "cbn" or is_value(t.arg, sig)):
            return path, substitute(t.fn.body, t.fn.var, t.arg)
        return (_find(t.fn, strat, sig, strong, path + (0,))
                or _find(t.arg, strat, sig, strong, path + (1,)))
    if isinstance(t, Abs) and strong:
        return _find(t.body, strat, sig, strong, path + (0,))
    return None


def normalize(m: Term, strategy: str, fuel: int, signature=None,
              strong: bool = False) -> tuple[Term, Trace]:
    """Iterate step to a normal form, recording every step taken."""
    if fuel <= 0:
        raise EvalError("fuel must be positive")
    steps: list[TraceStep] = []
    cur = m
    for _ in range(fuel):
        hit = step(cur, strategy, signature, strong)
        if hit is None:
            return cur, Trace(m, tuple(steps))
        occ, cur = hit
        steps.append(TraceStep(strategy, occ, None, cur, None))
    if step(cur, strategy, signature, strong) is None:
        return cur, Trace(m, tuple(steps))
    raise FuelExhausted(cur, Trace(m, tuple(steps)))


# ------------------------------------------------ instrumented reduction

@dataclass(frozen=True)
class InstrumentedRun:
    trace: Trace
    violations: tuple[str, ...]
    derivation: EtasDerivation


def instrumented_reduce(d: EtasDerivation, fuel: int, signature=None,
                        occurrences=None) -> InstrumentedRun:
    """Reduce a derivation, checking the size profile after every step.

    Follows the cbv strategy unless an explicit list of redex
    occurrences is supplied, in which case those are stepped in order.
    A beta step at level i must keep sizes below i, strictly shrink
    level i, and blow up any deeper level j by at most a factor of the
    sizes at or below j.  Constant steps are recorded but not checked.
    """
    check_etas_derivation(d, signature)
    if not is_typing(d):
        raise EtasCheckError("instrumented run needs a typing judgement")
    initial = d.subject
    chosen = list(occurrences) if occurrences is not None else None
    steps: list[TraceStep] = []
    violations: list[str] = []
    for n in range(fuel):
        if chosen is not None:
            if not chosen:
                break
            occ = chosen.pop(0)
        else:
            hit = step(d.subject, "cbv", signature)
            if hit is None:
                break
            occ = hit[0]
        red = subterm_at(d.subject, occ)
        before = measures(d)
        if isinstance(red, App) and isinstance(red.fn, Abs):
            level, d2 = reduce_derivation(d, occ, signature)
            _check_profiles(n, level, before, measures(d2), violations)
        else:
            level, d2 = delta_reduce_derivation(d, occ, signature)
        steps.append(TraceStep("cbv", occ, level, d2.subject, measures(d2)))
        d = d2
    else:
        if chosen or step(d.subject, "cbv", signature) is not None:
            raise FuelExhausted(d.subject, Trace(initial, tuple(steps)))
    return InstrumentedRun(Trace(initial, tuple(steps)),
                           tuple(violations), d)


def _check_profiles(n, level, before, after, out):
    width = max(len(before.sizes), len(after.sizes))
    for j in range(width):
        b, a = before.size(j), after.size(j)
        if j < level and a != b:
            out.append(f"step {n}: size at level {j} changed {b} -> {a} "
                       f"below the rewrite level {level}")
        elif j == level and not a < b:
            out.append(f"step {n}: size at rewrite level {j} did not "
                       f"shrink: {b} -> {a}")
        elif j > level:
            cap = before.size(j) * sum(before.size(k) for k in range(j + 1))
            if a > cap:
                out.append(f"step {n}: size at level {j} grew {b} -> {a}, "
                           f"over the cap {cap}")


# ------------------------------------------------ constant steps, typed

_EMPTY = ContextTriple({}, {}, {})


def delta_reduce_derivation(d: EtasDerivation, occ,
                            signature) -> tuple[int, EtasDerivation]:
    """Fire the iterator or conditional redex at occ inside a derivation.

    The judgement at the redex must carry no hypotheses; weak evaluation
    of a closed subject only ever reduces at such positions.
    """
    if signature is None:
        raise EvalError("constant step without a signature")

    def rec(node, path, depth):
        if node.rule == "!":
            c = rec(node.children[0], path, depth + 1)
            return EtasDerivation("!", node.ctx, c.subject, node.type, (c,))
        if not path:
            return _fire(node, signature)
        i, rest = path[0], path[1:]
        if node.rule in ("I-o^L", "I-o^I") and i == 0:
            c = rec(node.children[0], rest, depth)
            return EtasDerivation(node.rule, node.ctx,
                                  Abs(node.subject.var, c.subject),
                                  node.type, (c,))
        if node.rule == "E-o" and i in (0, 1):
            f, a = node.children
            if i == 0:
                f = rec(f, rest, depth)
            else:
                a = rec(a, rest, depth)
            return EtasDerivation("E-o", node.ctx, App(f.subject, a.subject),
                                  node.type, (f, a))
        raise EtasCheckError(f"bad occurrence {occ}")

    def _fire(node, sig):
        if node.ctx.names():
            raise EvalError("constant step needs an empty local context")
        head, arg_ds = _spine_derivs(node)
        if head.rule != "Const" or not isinstance(head.subject, Const):
            raise EvalError(f"no constant redex at occurrence {occ}")
        k = len(sig.constructors)
        if len(arg_ds) != k + 1:
            raise EvalError("constant is not fully applied")
        scrut_d, branch_ds = arg_ds[0], arg_ds[1:]
        name = head.subject.name
        if name == sig.iter_constant:
            out = _fold_deriv(sig, scrut_d.subject, branch_ds)
            out = EtasDerivation("!", _EMPTY, out.subject,
                                 TBang(out.type), (out,))
        elif name == sig.cond_constant:
            chead, carg_ds = _spine_derivs(scrut_d)
            i = sig._ctor_index(chead.subject.name)
            out = branch_ds[i]
            for ad in carg_ds:
                out = EtasDerivation("E-o", _EMPTY,
                                     App(out.subject, ad.subject),
                                     out.type.right, (out, ad))
        else:
            raise EvalError(f"constant {name} has no reduction rule")
        if out.type != node.type:
            raise EtasCheckError("constant step changed the judgement type")
        return out

    out = rec(d, tuple(occ), 0)
    # recompute the level by walking the original derivation
    level = 0
    node = d
    path = tuple(occ)
    while True:
        if node.rule == "!":
            level += 1
            node = node.children[0]
            continue
        if not path:
            break
        node = node.children[path[0]]
        path = path[1:]
    return level, out


def _spine_derivs(node):
    args = []
    while node.rule == "E-o":
        args.append(node.children[1])
        node = node.children[0]
    args.reverse()
    return node, args


def _fold_deriv(sig, value, branch_ds):
    """Derivation of the fold of an algebra value, one unbanged branch
    derivation per constructor."""
    bodies = []
    for bd in branch_ds:
        if bd.rule != "!":
            raise EvalError("iterator branch is not promoted")
        bodies.append(bd.children[0])

    def go(v):
        head, args = _spine_terms(v)
        i = sig._ctor_index(head.name)
        cur = bodies[i]
        for a in args:
            ad = go(a)
            cur = EtasDerivation("E-o", _EMPTY, App(cur.subject, ad.subject),
                                 cur.type.right, (cur, ad))
        return cur

    return go(value)


def _spine_terms(t):
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


# ------------------------------------------------------------ bound tables

#: beyond this many bits a bound is reported as infinity
CAP_BITS = 8192

_INF = float("inf")


def _add(a, b):
    # adding float infinity to a multi-thousand-bit int overflows the
    # implicit float conversion, so route around it
    if a == _INF or b == _INF:
        return _INF
    return a + b


def _pow(b, e):
    if b == 0:
        return 0
    if b == 1:
        return 1
    if b == _INF or e == _INF or e * b.bit_length() > CAP_BITS:
        return _INF
    return b ** e


def _two_pow(e):
    if e == _INF or e > CAP_BITS:
        return _INF
    return 2 ** e


@dataclass(frozen=True)
class BoundTable:
    """f and g evaluated at one initial size for every depth up to d.

    f caps the total size of any intermediate term, g the number of
    steps.  Entries are exact naturals until they pass CAP_BITS bits,
    then float infinity; comparisons against observed counts stay valid
    either way.
    """

    depth: int
    size: int
    f: tuple
    g: tuple


def elementary_bounds(d: int, n: int) -> BoundTable:
    """Evaluate the bound recurrences at size n for depths 0..d."""
    if d < 0 or n < 0:
        raise EvalError("depth and size must be naturals")
    fs, gs = [n], [n]
    for _ in range(d):
        fp, gp = fs[-1], gs[-1]
        if fp == _INF or gp == _INF:
            fs.append(_INF)
            gs.append(_INF)
            continue
        fs.append(_add(fp, _pow(fp + gp, _two_pow(gp + 1))))
        acc = gp
        i = 0
        while i <= gp:
            term = _pow(fp + i, _two_pow(i + 1))
            acc = _add(acc, term)
            if term == _INF:
                break
            i += 1
        gs.append(acc)
    return BoundTable(d, n, tuple(fs), tuple(gs))
