"""Principal typings and their elaboration into checked derivations.

Inference walks the term once.  Every context entry and every result
scheme is kept current: each unification's bindings are applied to the
live schemes immediately, so no composed substitution is ever chased.
Emitted exponent constraints accumulate in one shared set.  Each node
records a snapshot of the schemes it introduced; applying the final
cumulative binding map to a snapshot reconstructs the scheme tree for
elaboration under any satisfying ground assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .eatypes import EAType, TArrow, TBang, TVar, is_modal, type_to_str
from .etas import ContextTriple, EtasDerivation, EtasCheckError, transform
from .linsolve import solve
from .schemes import (
    NameSource, SArrow, SBang, SVar, Scheme, SchemeSubstitution, TypeScheme,
    _apply, banged, cgt0, exp_lit, scheme_to_str, scheme_vars,
)
from .terms import Abs, App, Const, NameGen, Term, Var, free_vars
from .unify import UnifyFailure, _unify


@dataclass(frozen=True)
class PTNode:
    """Inference-time snapshot of one term node, for later elaboration."""
    kind: str                    # "var" | "abs" | "app" | "const"
    term: Term
    result: Scheme
    children: tuple["PTNode", ...] = ()
    wrap: object = None          # outermost fresh exponent added here
    binder: Scheme | None = None
    binder_absent: bool = False
    leaf_scheme: Scheme | None = None


@dataclass(frozen=True)
class PrincipalTyping:
    sigma: dict[str, TypeScheme]
    result: TypeScheme
    constraints: frozenset
    term: Term
    template: PTNode
    mapping: dict[str, Scheme]
    gen: NameSource
    signature: object = None


class _State:
    def __init__(self, signature):
        self.gen = NameSource()
        self.constraints: set = set()
        self.mapping: dict[str, Scheme] = {}
        self.mapvars: dict[str, frozenset] = {}
        self.signature = signature

    def bind(self, m: dict[str, Scheme]):
        """Fold new bindings into the cumulative map, keeping images current.

        Substituting a banged scheme under a bang merges exponents by
        emitting a fresh-literal equation; those land in the constraint
        set like any other.
        """
        if not m:
            return
        dom = set(m)
        for k, vs in list(self.mapvars.items()):
            if vs & dom:
                img = _apply(m, self.mapping[k], self.constraints, self.gen)
                self.mapping[k] = img
                self.mapvars[k] = frozenset(scheme_vars(img))
        for k, v in m.items():
            self.mapping[k] = v
            self.mapvars[k] = frozenset(scheme_vars(v))


class _Ctx:
    """Live scheme context with cached variable sets."""

    def __init__(self):
        self.entries: dict[str, Scheme] = {}
        self.vars: dict[str, frozenset] = {}

    def set(self, name, scheme):
        self.entries[name] = scheme
        self.vars[name] = frozenset(scheme_vars(scheme))

    def pop(self, name):
        self.vars.pop(name, None)
        return self.entries.pop(name)

    def apply(self, m, gen, sink):
        if not m:
            return
        dom = set(m)
        for name, vs in self.vars.items():
            if vs & dom:
                self.set(name, _apply(m, self.entries[name], sink, gen))

    def wrap_all(self, e):
        for name in list(self.entries):
            self.set(name, banged(e, self.entries[name]))


class Untypable(Exception):
    def __init__(self, failure):
        super().__init__(str(failure))
        self.failure = failure


def pt(term: Term, signature=None) -> PrincipalTyping | None:
    """Principal typing of a term; None when unification fails."""
    term = _uniquify(term)
    counts = _occurrences(term)
    st = _State(signature)
    try:
        ctx, res, node = _infer(term, st, counts)
    except Untypable:
        return None
    cs = frozenset(st.constraints)
    sigma = {x: TypeScheme(s, cs) for x, s in ctx.entries.items()}
    return PrincipalTyping(sigma, TypeScheme(res, cs), cs, term, node,
                           st.mapping, st.gen, signature)


def typable(term: Term, signature=None) -> bool:
    p = pt(term, signature)
    return p is not None and solve(p.constraints) is not None


def _uniquify(term: Term) -> Term:
    gen = NameGen(free_vars(term))
    used = set(free_vars(term))

    def walk(t, ren):
        if isinstance(t, Var):
            return Var(ren.get(t.name, t.name))
        if isinstance(t, Const):
            return t
        if isinstance(t, App):
            return App(walk(t.fn, ren), walk(t.arg, ren))
        if isinstance(t, Abs):
            name = t.var
            if name in used:
                name = gen.fresh(t.var)
            used.add(name)
            inner = dict(ren)
            inner[t.var] = name
            return Abs(name, walk(t.body, inner))
        raise TypeError(f"not a term: {t!r}")

    return walk(term, {})


def _occurrences(term: Term) -> dict[str, int]:
    counts: dict[str, int] = {}

    def walk(t):
        if isinstance(t, Var):
            counts[t.name] = counts.get(t.name, 0) + 1
        elif isinstance(t, App):
            walk(t.fn)
            walk(t.arg)
        elif isinstance(t, Abs):
            walk(t.body)

    walk(term)
    return counts


def _run_unify(st: _State, s1: Scheme, s2: Scheme):
    out = _unify(s1, s2, st.gen)
    if isinstance(out, UnifyFailure):
        raise Untypable(out)
    mapping, cs, omega = out
    st.constraints |= cs
    st.bind(mapping)
    return mapping, omega


def _infer(term, st, counts):
    if isinstance(term, Var):
        s = SBang(exp_lit(st.gen.lit()), SVar(st.gen.var()))
        ctx = _Ctx()
        ctx.set(term.name, s)
        return ctx, s, PTNode("var", term, s, leaf_scheme=s)

    if isinstance(term, Const):
        if st.signature is None:
            raise Untypable(UnifyFailure("clash", SVar(term.name), SVar(term.name)))
        core = st.signature.constant_scheme(term.name, st.gen)
        wrap = exp_lit(st.gen.lit())
        s = banged(wrap, core)
        return _Ctx(), s, PTNode("const", term, s, wrap=wrap, leaf_scheme=core)

    if isinstance(term, Abs):
        ctx, res, node = _infer(term.body, st, counts)
        x = term.var
        if x not in ctx.entries:
            binder = SBang(exp_lit(st.gen.lit()), SVar(st.gen.var()))
            wrap = exp_lit(st.gen.lit())
            out = SBang(wrap, SArrow(binder, res))
            ctx.wrap_all(wrap)
            return ctx, out, PTNode("abs", term, out, (node,), wrap, binder, True)
        tau = ctx.pop(x)
        if counts.get(x, 0) <= 1:
            wrap = exp_lit(st.gen.lit())
            out = SBang(wrap, SArrow(tau, res))
            ctx.wrap_all(wrap)
            return ctx, out, PTNode("abs", term, out, (node,), wrap, tau)
        target = SBang(exp_lit(st.gen.lit()), SVar(st.gen.var()))
        st.constraints.add(cgt0(target.exp))
        m, _ = _run_unify(st, tau, target)
        binder = _apply(m, target, st.constraints, st.gen)
        ctx.apply(m, st.gen, st.constraints)
        res = _apply(m, res, st.constraints, st.gen)
        wrap = exp_lit(st.gen.lit())
        out = SBang(wrap, SArrow(binder, res))
        ctx.wrap_all(wrap)
        return ctx, out, PTNode("abs", term, out, (node,), wrap, binder)

    if isinstance(term, App):
        ctx1, res1, n1 = _infer(term.fn, st, counts)
        ctx2, res2, n2 = _infer(term.arg, st, counts)
        hole = SBang(exp_lit(st.gen.lit()), SVar(st.gen.var()))
        m, _ = _run_unify(st, res1, SArrow(res2, hole))
        res = _apply(m, hole, st.constraints, st.gen)
        ctx1.apply(m, st.gen, st.constraints)
        ctx2.apply(m, st.gen, st.constraints)
        for x in sorted(set(ctx1.entries) & set(ctx2.entries)):
            mx, omega = _run_unify(st, ctx1.entries[x], ctx2.entries[x])
            ctx2.pop(x)
            ctx1.apply(mx, st.gen, st.constraints)
            ctx2.apply(mx, st.gen, st.constraints)
            ctx1.set(x, _apply(mx, omega, st.constraints, st.gen))
            res = _apply(mx, res, st.constraints, st.gen)
        for x in list(ctx2.entries):
            ctx1.set(x, ctx2.entries[x])
        wrap = exp_lit(st.gen.lit())
        out = banged(wrap, res)
        ctx1.wrap_all(wrap)
        return ctx1, out, PTNode("app", term, out, (n1, n2), wrap)

    raise TypeError(f"not a term: {term!r}")


# ------------------------------------------------------------ elaboration

class InstantiateError(ValueError):
    pass


class _Grounder:
    """Snapshot scheme -> ground type, through the final binding map."""

    def __init__(self, p: PrincipalTyping, S: SchemeSubstitution):
        self.mapping = p.mapping
        self.gen = p.gen
        self.types = dict(S.types)
        self.exps = dict(S.exps)

    def exp_of(self, e) -> int:
        c, k = e.flatten()
        total = k
        for name, mult in c.items():
            total += mult * self.exps.setdefault(name, 0)
        return total

    def ground(self, s: Scheme) -> EAType:
        """Ground a scheme, chasing the binding map at variables.  Bang
        merges turn into plain addition here, no equations needed."""
        if isinstance(s, SVar):
            if s.name in self.mapping:
                return self.ground(self.mapping[s.name])
            if s.name not in self.types:
                self.types[s.name] = TVar(s.name.lstrip("'"))
            return self.types[s.name]
        if isinstance(s, SArrow):
            return TArrow(self.ground(s.left), self.ground(s.right))
        if isinstance(s, SBang):
            t = self.ground(s.body)
            for _ in range(self.exp_of(s.exp)):
                t = TBang(t)
            return t
        from .eatypes import TAlg
        from .schemes import SAlg
        if isinstance(s, SAlg):
            return TAlg(s.name)
        raise TypeError(f"not a scheme: {s!r}")


def instantiate(p: PrincipalTyping, S: SchemeSubstitution,
                placement: str = "default", requested=None):
    """Ground a principal typing into a checked derivation.

    Returns (ContextTriple, term, EAType, EtasDerivation).  Default
    placement sends banged hypotheses to the modal slot, linear ones
    used more than once to the parking slot, the rest to the linear
    slot.  Explicit placement takes requested (a name->slot map for
    free variables) and fails rather than bending modality or the
    application split.
    """
    from .schemes import satisfies
    if not satisfies(p.constraints, _total(S, p.constraints)):
        raise InstantiateError("assignment does not satisfy the constraints")
    if placement not in ("default", "explicit"):
        raise InstantiateError(f"unknown placement mode {placement!r}")
    requested = dict(requested or {})
    if placement == "default" and requested:
        raise InstantiateError("slot requests need explicit placement")
    g = _Grounder(p, S)
    counts = _occurrences(p.term)
    d = _build(p.template, g, counts, requested, p.signature)
    return d.ctx, d.subject, d.type, d


def _total(S, constraints):
    assign = dict(S.exps)
    for c in constraints:
        for name in c.literals():
            assign.setdefault(name, 0)
    return assign


def _slot_for(name, ground_type, counts, requested):
    want = requested.get(name)
    if is_modal(ground_type):
        if want in ("gamma", "theta"):
            raise InstantiateError(
                f"{name} grounds to modal {type_to_str(ground_type)}; "
                f"it cannot sit in the {want} slot")
        return "delta"
    if want == "delta":
        raise InstantiateError(
            f"{name} grounds to linear {type_to_str(ground_type)}; "
            "the modal slot needs a banged type")
    if want is not None:
        return want
    return "theta" if counts.get(name, 0) > 1 else "gamma"


def _bang_up(d: EtasDerivation, n: int) -> EtasDerivation:
    for _ in range(n):
        delta = {}
        for part in (d.ctx.gamma, d.ctx.delta, d.ctx.theta):
            for v, t in part.items():
                delta[v] = TBang(t)
        d = EtasDerivation("!", ContextTriple({}, delta, {}), d.subject,
                           TBang(d.type), (d,))
    return d


def _build(node: PTNode, g: _Grounder, counts, requested, signature):
    if node.kind == "var":
        t = g.ground(node.leaf_scheme)
        name = node.term.name
        slot = _slot_for(name, t, counts, requested)
        ctx = ContextTriple(
            {name: t} if slot == "gamma" else {},
            {name: t} if slot == "delta" else {},
            {name: t} if slot == "theta" else {})
        rule = {"gamma": "A^L", "delta": "A^I", "theta": "A^P"}[slot]
        return EtasDerivation(rule, ctx, node.term, t)

    if node.kind == "const":
        t = g.ground(node.leaf_scheme)
        d = EtasDerivation("Const", ContextTriple({}, {}, {}), node.term, t)
        return _bang_up(d, g.exp_of(node.wrap))

    if node.kind == "abs":
        d = _build(node.children[0], g, counts, requested, signature)
        x = node.term.var
        tb = g.ground(node.binder)
        modal = is_modal(tb)
        if node.binder_absent or x not in d.ctx.names():
            d = transform(d, "weaken", **{"delta" if modal else "gamma": {x: tb}})
        rule = "I-o^I" if modal else "I-o^L"
        kind, have = d.ctx.lookup(x)
        if kind == "theta":
            raise InstantiateError(
                f"binder {x} is linear but shared; no abstraction rule fits")
        if have != tb:
            raise InstantiateError(f"binder {x} grounds inconsistently")
        parts = {"gamma": dict(d.ctx.gamma), "delta": dict(d.ctx.delta),
                 "theta": dict(d.ctx.theta)}
        parts["gamma" if not modal else "delta"].pop(x, None)
        ctx = ContextTriple(parts["gamma"], parts["delta"], parts["theta"])
        d = EtasDerivation(rule, ctx, node.term, TArrow(tb, d.type), (d,))
        return _bang_up(d, g.exp_of(node.wrap))

    if node.kind == "app":
        f = _build(node.children[0], g, counts, requested, signature)
        a = _build(node.children[1], g, counts, requested, signature)
        shared_gamma = set(f.ctx.gamma) & set(a.ctx.gamma)
        if shared_gamma:
            raise InstantiateError(
                f"linear hypotheses {sorted(shared_gamma)} would be split "
                "across an application")
        delta = _merge_slot(f.ctx.delta, a.ctx.delta)
        theta = _merge_slot(f.ctx.theta, a.ctx.theta)
        f = transform(f, "weaken",
                      delta={k: v for k, v in delta.items() if k not in f.ctx.delta},
                      theta={k: v for k, v in theta.items() if k not in f.ctx.theta})
        a = transform(a, "weaken",
                      delta={k: v for k, v in delta.items() if k not in a.ctx.delta},
                      theta={k: v for k, v in theta.items() if k not in a.ctx.theta})
        if not isinstance(f.type, TArrow) or f.type.left != a.type:
            raise InstantiateError("application grounds to mismatched types")
        ctx = ContextTriple({**f.ctx.gamma, **a.ctx.gamma}, dict(delta), dict(theta))
        d = EtasDerivation("E-o", ctx, node.term, f.type.right, (f, a))
        return _bang_up(d, g.exp_of(node.wrap))

    raise TypeError(f"unknown node kind {node.kind!r}")


def _merge_slot(p1, p2):
    out = dict(p1)
    for k, v in p2.items():
        if k in out and out[k] != v:
            raise InstantiateError(f"{k} grounds inconsistently across branches")
        out[k] = v
    return out
