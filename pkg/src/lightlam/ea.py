"""The explicit-sharing term calculus and its proof system.

EA-terms carry sharing (contraction) and boxing (promotion) in the syntax
instead of duplicating subterms.  This module gives them a natural-deduction
proof system, the seven rewrite rules that push sharing around, and the two
readbacks into pure lambda terms: an executing one that performs every
explicit substitution, and a frugal one that compiles non-variable sharing
into beta-redexes so term size at most doubles.
"""

from dataclasses import dataclass
from collections import deque

from .eatypes import EAType, TArrow, TBang, is_modal, type_to_str
from .terms import (
    Term, Var, Abs, App, Const,
    EATerm, EVar, EAbs, EApp, EPromote, EContract,
    NameGen, all_names, alpha_eq, canonical, free_vars, is_affine, is_value,
    eaterm_to_str, ea_splice, rename_ea, substitute, term_to_str,
)
from .etas import (
    ContextTriple, EtasDerivation, EtasCheckError,
    transform, rename_free, _freshen_binders,
)


class NealCheckError(ValueError):
    pass


@dataclass(frozen=True)
class NealDerivation:
    """One node of a proof in the sharing calculus.

    rule is one of "A", "C", "I-o", "E-o", "!".  The context is a flat
    name-to-type map; rules that split it require disjointness.
    """

    rule: str
    ctx: dict[str, EAType]
    subject: EATerm
    type: EAType
    children: tuple["NealDerivation", ...] = ()

    def conclusion(self) -> str:
        ctx = ", ".join(f"{x} : {type_to_str(t)}" for x, t in sorted(self.ctx.items()))
        return f"{ctx} |- {eaterm_to_str(self.subject)} : {type_to_str(self.type)}"


NEAL_RULES = ("A", "C", "I-o", "E-o", "!")


def _nexpect(cond, d, msg):
    if not cond:
        raise NealCheckError(f"{msg}\n  at: {d.conclusion()}")


def check_neal(d: NealDerivation) -> None:
    """Raise NealCheckError unless d is a valid derivation."""
    r = d.rule
    if r == "A":
        _nexpect(isinstance(d.subject, EVar), d, "axiom subject must be a variable")
        _nexpect(not d.children, d, "axiom has no premises")
        _nexpect(d.ctx.get(d.subject.name) == d.type, d,
                 "subject type missing from the context")
    elif r == "I-o":
        _nexpect(isinstance(d.subject, EAbs), d, "abstraction rule needs an abstraction")
        _nexpect(len(d.children) == 1, d, "abstraction rule has one premise")
        c = d.children[0]
        check_neal(c)
        _nexpect(isinstance(d.type, TArrow), d, "abstraction type must be an arrow")
        x = d.subject.var
        _nexpect(c.subject == d.subject.body and c.type == d.type.right, d,
                 "premise mismatch")
        want = dict(d.ctx)
        want[x] = d.type.left
        _nexpect(x not in d.ctx and c.ctx == want, d, "premise context mismatch")
    elif r == "E-o":
        _nexpect(isinstance(d.subject, EApp), d, "application rule needs an application")
        _nexpect(len(d.children) == 2, d, "application rule has two premises")
        f, a = d.children
        check_neal(f)
        check_neal(a)
        _nexpect(f.subject == d.subject.fn and a.subject == d.subject.arg, d,
                 "premise subjects mismatch")
        _nexpect(isinstance(f.type, TArrow) and f.type.right == d.type
                 and f.type.left == a.type, d, "arrow elimination types mismatch")
        _nexpect(not (set(f.ctx) & set(a.ctx)), d, "contexts must be disjoint")
        _nexpect({**f.ctx, **a.ctx} == d.ctx, d, "contexts must join into the conclusion")
    elif r == "C":
        _nexpect(isinstance(d.subject, EContract), d, "sharing rule needs a contraction")
        _nexpect(len(d.children) == 2, d, "sharing rule has two premises")
        darg, dbody = d.children
        check_neal(darg)
        check_neal(dbody)
        x, y = d.subject.var1, d.subject.var2
        _nexpect(darg.subject == d.subject.arg and dbody.subject == d.subject.body,
                 d, "premise subjects mismatch")
        cut = darg.type
        _nexpect(is_modal(cut), d, "shared hypotheses need a banged type")
        _nexpect(dbody.ctx.get(x) == cut and dbody.ctx.get(y) == cut, d,
                 "both shared names must carry the cut type")
        _nexpect(dbody.type == d.type, d, "conclusion type comes from the body")
        rest = {k: v for k, v in dbody.ctx.items() if k not in (x, y)}
        _nexpect(not (set(darg.ctx) & set(rest)), d, "contexts must be disjoint")
        _nexpect({**darg.ctx, **rest} == d.ctx, d, "contexts must join into the conclusion")
    elif r == "!":
        _nexpect(isinstance(d.subject, EPromote), d, "box rule needs a promotion")
        binds = d.subject.bindings
        _nexpect(len(d.children) == len(binds) + 1, d,
                 "box rule takes one premise per binding plus the body")
        *dargs, dbody = d.children
        for c in d.children:
            check_neal(c)
        _nexpect(d.type == TBang(dbody.type), d, "box adds one ! to the body type")
        _nexpect(dbody.subject == d.subject.body, d, "body premise mismatch")
        want_body = {}
        seen = set()
        for (m, x), da in zip(binds, dargs):
            _nexpect(da.subject == m, d, f"premise for binding {x} has the wrong subject")
            _nexpect(isinstance(da.type, TBang), d, f"binding {x} needs a banged premise")
            _nexpect(x not in seen, d, f"binding name {x} repeats")
            seen.add(x)
            want_body[x] = da.type.inner
        _nexpect(dbody.ctx == want_body, d,
                 "body context must be exactly the unboxed bindings")
        merged: dict[str, EAType] = {}
        for da in dargs:
            _nexpect(not (set(da.ctx) & set(merged)), d, "contexts must be disjoint")
            merged.update(da.ctx)
        for k, v in merged.items():
            _nexpect(d.ctx.get(k) == v, d, f"premise entry {k} lost in the conclusion")
    else:
        raise NealCheckError(f"unknown rule {r!r}")


# ------------------------------------------------------------- translations

def _subst_sim(t: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution on lambda terms."""
    if not mapping:
        return t
    img_free = frozenset().union(*(free_vars(v) for v in mapping.values()))
    avoid = set(all_names(t)) | set(img_free) | set(mapping)
    for v in mapping.values():
        avoid |= all_names(v)

    def freshen(base):
        cand = base + "'"
        while cand in avoid:
            cand += "'"
        avoid.add(cand)
        return cand

    def go(t, m):
        if isinstance(t, Var):
            return m.get(t.name, t)
        if isinstance(t, Const):
            return t
        if isinstance(t, App):
            return App(go(t.fn, m), go(t.arg, m))
        if isinstance(t, Abs):
            fv = free_vars(t.body)
            live = {k: v for k, v in m.items() if k != t.var and k in fv}
            if not live:
                return t
            if t.var in img_free:
                nv = freshen(t.var)
                live[t.var] = Var(nv)
                return Abs(nv, go(t.body, live))
            return Abs(t.var, go(t.body, live))
        raise TypeError(f"not a term: {t!r}")

    return go(t, dict(mapping))


def translate_star(m: EATerm) -> Term:
    """Execute every explicit substitution, forgetting boxes.

    Contraction arguments are substituted for both shared names at once, so
    the output can be exponentially larger than the input.
    """
    if isinstance(m, EVar):
        return Var(m.name)
    if isinstance(m, EAbs):
        return Abs(m.var, translate_star(m.body))
    if isinstance(m, EApp):
        return App(translate_star(m.fn), translate_star(m.arg))
    if isinstance(m, EContract):
        arg = translate_star(m.arg)
        return _subst_sim(translate_star(m.body), {m.var1: arg, m.var2: arg})
    if isinstance(m, EPromote):
        sub = {x: translate_star(a) for a, x in m.bindings}
        return _subst_sim(translate_star(m.body), sub)
    raise TypeError(f"not an EA term: {m!r}")


# Binders introduced by the frugal readback get this prefix.  The tokenizer
# cannot produce it, so the cleanup pass below can tell the redexes the
# readback created from ones that were already there.
ADMIN_PREFIX = "%"


def translate_sharp(m: EATerm) -> Term:
    """Compile sharing to beta-redexes instead of executing it.

    Variable arguments are still substituted directly; any other shared or
    boxed argument M becomes an application (fresh abstraction) M', keeping
    the output length at most twice the input length.
    """
    ctr = [0]

    def fresh():
        ctr[0] += 1
        return f"{ADMIN_PREFIX}s{ctr[0]}"

    def go(m):
        if isinstance(m, EVar):
            return Var(m.name)
        if isinstance(m, EAbs):
            return Abs(m.var, go(m.body))
        if isinstance(m, EApp):
            return App(go(m.fn), go(m.arg))
        if isinstance(m, EContract):
            if isinstance(m.arg, EVar):
                w = Var(m.arg.name)
                return _subst_sim(go(m.body), {m.var1: w, m.var2: w})
            z = fresh()
            body = _subst_sim(go(m.body), {m.var1: Var(z), m.var2: Var(z)})
            return App(Abs(z, body), go(m.arg))
        if isinstance(m, EPromote):
            if not m.bindings:
                return go(m.body)
            (arg, x), rest = m.bindings[0], m.bindings[1:]
            peeled = go(EPromote(m.body, rest))
            if isinstance(arg, EVar):
                return _subst_sim(peeled, {x: Var(arg.name)})
            z = fresh()
            return App(Abs(z, _subst_sim(peeled, {x: Var(z)})), go(arg))
        raise TypeError(f"not an EA term: {m!r}")

    return go(m)


def reduce_administrative(t: Term, limit: int = 100000) -> Term:
    """Fire exactly the beta-redexes translate_sharp introduced.

    Reduces the leftmost such redex until none remain.  This is a complete
    development of a fixed redex family, so it terminates; the limit is a
    tripwire, not a tuning knob.
    """
    def find(t):
        if isinstance(t, App):
            if isinstance(t.fn, Abs) and t.fn.var.startswith(ADMIN_PREFIX):
                return substitute(t.fn.body, t.fn.var, t.arg), True
            fn, hit = find(t.fn)
            if hit:
                return App(fn, t.arg), True
            arg, hit = find(t.arg)
            return App(t.fn, arg), hit
        if isinstance(t, Abs):
            body, hit = find(t.body)
            return Abs(t.var, body) if hit else t, hit
        return t, False

    for _ in range(limit):
        t, hit = find(t)
        if not hit:
            return t
    raise RuntimeError("administrative reduction did not terminate")


# ------------------------------------------------------------ normalization

def _step_here(t: EATerm, gen: NameGen):
    """All reducts obtainable by rewriting at the root of t."""
    out = []
    if isinstance(t, EApp):
        if isinstance(t.fn, EAbs):
            out.append(("beta", ea_splice(t.fn.body, t.fn.var, t.arg)))
        if isinstance(t.fn, EContract):
            c = t.fn
            x1, x2 = gen.fresh(c.var1), gen.fresh(c.var2)
            body = rename_ea(c.body, {c.var1: x1, c.var2: x2})
            out.append(("app-c", EContract(EApp(body, t.arg), c.arg, x1, x2)))
        if isinstance(t.arg, EContract):
            c = t.arg
            x1, x2 = gen.fresh(c.var1), gen.fresh(c.var2)
            body = rename_ea(c.body, {c.var1: x1, c.var2: x2})
            out.append(("app-c", EContract(EApp(t.fn, body), c.arg, x1, x2)))
    elif isinstance(t, EContract):
        if isinstance(t.arg, EPromote):
            box = t.arg
            xs = [x for _, x in box.bindings]
            xs1 = [gen.fresh(x) for x in xs]
            copy1 = EPromote(box.body,
                             tuple((EVar(x1), x) for x1, x in zip(xs1, xs)))
            # the second copy is renamed apart wholesale so no name is
            # bound twice after the duplication
            mapping = {nm: gen.fresh(nm) for nm in sorted(all_names(box.body) | set(xs))}
            body2 = rename_ea(box.body, mapping)
            ys1 = [gen.fresh(x) for x in xs]
            copy2 = EPromote(body2,
                             tuple((EVar(y1), mapping[x]) for y1, x in zip(ys1, xs)))
            new = ea_splice(ea_splice(t.body, t.var1, copy1), t.var2, copy2)
            for (arg, _), x1, y1 in zip(box.bindings, xs1, ys1):
                new = EContract(new, arg, x1, y1)
            out.append(("dup", new))
        if isinstance(t.arg, EContract):
            inner = t.arg
            y1, y2 = gen.fresh(inner.var1), gen.fresh(inner.var2)
            body = rename_ea(inner.body, {inner.var1: y1, inner.var2: y2})
            out.append(("c-c", EContract(
                EContract(t.body, body, t.var1, t.var2), inner.arg, y1, y2)))
    elif isinstance(t, EPromote):
        for i, (arg, x) in enumerate(t.bindings):
            if isinstance(arg, EPromote):
                body = ea_splice(t.body, x, arg.body)
                binds = t.bindings[:i] + arg.bindings + t.bindings[i + 1:]
                out.append(("box-box", EPromote(body, binds)))
            if isinstance(arg, EContract):
                y1, y2 = gen.fresh(arg.var1), gen.fresh(arg.var2)
                inner = rename_ea(arg.body, {arg.var1: y1, arg.var2: y2})
                binds = t.bindings[:i] + ((inner, x),) + t.bindings[i + 1:]
                out.append(("box-c", EContract(
                    EPromote(t.body, binds), arg.arg, y1, y2)))
    elif isinstance(t, EAbs):
        if isinstance(t.body, EContract) and t.var not in free_vars(t.body.arg):
            c = t.body
            out.append(("abs-c", EContract(EAbs(t.var, c.body), c.arg, c.var1, c.var2)))
    return out


def ea_step(m: EATerm) -> list[tuple[str, EATerm]]:
    """Every single-step reduct of m, with the rule that produced it.

    The rewrite relation is closed under arbitrary contexts.  Fresh names
    come from one deterministic supply per call, so the result list is
    reproducible for equal inputs.
    """
    gen = NameGen(avoid=all_names(m))
    out = []

    def walk(t, wrap):
        for rule, new in _step_here(t, gen):
            out.append((rule, wrap(new)))
        if isinstance(t, EAbs):
            walk(t.body, lambda b, t=t: wrap(EAbs(t.var, b)))
        elif isinstance(t, EApp):
            walk(t.fn, lambda f, t=t: wrap(EApp(f, t.arg)))
            walk(t.arg, lambda a, t=t: wrap(EApp(t.fn, a)))
        elif isinstance(t, EPromote):
            walk(t.body, lambda b, t=t: wrap(EPromote(b, t.bindings)))
            for i in range(len(t.bindings)):
                def put(a, t=t, i=i):
                    binds = t.bindings[:i] + ((a, t.bindings[i][1]),) + t.bindings[i + 1:]
                    return wrap(EPromote(t.body, binds))
                walk(t.bindings[i][0], put)
        elif isinstance(t, EContract):
            walk(t.body, lambda b, t=t: wrap(EContract(b, t.arg, t.var1, t.var2)))
            walk(t.arg, lambda a, t=t: wrap(EContract(t.body, a, t.var1, t.var2)))

    walk(m, lambda x: x)
    return out


def is_expansion(m: EATerm) -> bool:
    """A box whose bindings are all variables, under any number of
    variable-argument contractions."""
    while isinstance(m, EContract) and isinstance(m.arg, EVar):
        m = m.body
    return isinstance(m, EPromote) and all(isinstance(a, EVar) for a, _ in m.bindings)


# ----------------------------------------------------- proof translations

def _split(ctx: dict[str, EAType]) -> tuple[dict, dict]:
    lin = {x: t for x, t in ctx.items() if not is_modal(t)}
    mod = {x: t for x, t in ctx.items() if is_modal(t)}
    return lin, mod


def _neal_names(d: NealDerivation) -> set[str]:
    out = set(d.ctx) | all_names(d.subject)
    for c in d.children:
        out |= _neal_names(c)
    return out


def _etas_names(d: EtasDerivation) -> set[str]:
    out = d.ctx.names() | all_names(d.subject)
    for c in d.children:
        out |= _etas_names(c)
    return out


def _cross_weaken(a: EtasDerivation, b: EtasDerivation):
    """Bring two derivations to a common modal part."""
    extra_a = {k: v for k, v in b.ctx.delta.items() if k not in a.ctx.delta}
    extra_b = {k: v for k, v in a.ctx.delta.items() if k not in b.ctx.delta}
    if extra_a:
        a = transform(a, "weaken", delta=extra_a)
    if extra_b:
        b = transform(b, "weaken", delta=extra_b)
    return a, b


def neal_to_etas(d: NealDerivation) -> EtasDerivation:
    """Rebuild a sharing-calculus proof as a proof of the frugal readback.

    The context splits by modality: banged hypotheses move to the modal
    part, the rest stay linear, and the parking part is empty.  Introduced
    binder names are fresh, so the subject matches the readback of the
    original subject up to bound-name choice.
    """
    gen = NameGen(avoid=_neal_names(d))
    return _to_etas(d, gen)


def _to_etas(d: NealDerivation, gen: NameGen) -> EtasDerivation:
    r = d.rule
    if r == "A":
        x = d.subject.name
        lin, mod = _split(d.ctx)
        ctx = ContextTriple(lin, mod, {})
        rule = "A^I" if is_modal(d.type) else "A^L"
        return EtasDerivation(rule, ctx, Var(x), d.type)
    if r == "I-o":
        e = _to_etas(d.children[0], gen)
        x = d.subject.var
        if is_modal(d.type.left):
            ctx = e.ctx.replace(delta={k: v for k, v in e.ctx.delta.items() if k != x})
            return EtasDerivation("I-o^I", ctx, Abs(x, e.subject), d.type, (e,))
        ctx = e.ctx.replace(gamma={k: v for k, v in e.ctx.gamma.items() if k != x})
        return EtasDerivation("I-o^L", ctx, Abs(x, e.subject), d.type, (e,))
    if r == "E-o":
        f, a = (_to_etas(c, gen) for c in d.children)
        f, a = _cross_weaken(f, a)
        ctx = ContextTriple({**f.ctx.gamma, **a.ctx.gamma}, dict(f.ctx.delta), {})
        return EtasDerivation("E-o", ctx, App(f.subject, a.subject), d.type, (f, a))
    if r == "C":
        darg, dbody = d.children
        x, y = d.subject.var1, d.subject.var2
        e2 = _to_etas(dbody, gen)
        if isinstance(d.subject.arg, EVar):
            w = d.subject.arg.name
            if w in _etas_names(e2):
                e2 = _freshen_binders(e2, {w}, gen)
            e2 = transform(e2, "contract", var1=x, var2=y, fresh=w)
            lin, mod = _split({k: v for k, v in darg.ctx.items() if k != w})
            lin = {k: v for k, v in lin.items() if k not in e2.ctx.gamma}
            mod = {k: v for k, v in mod.items() if k not in e2.ctx.delta}
            return transform(e2, "weaken", gamma=lin, delta=mod) if lin or mod else e2
        e1 = _to_etas(darg, gen)
        z = gen.fresh("z")
        e2 = transform(e2, "contract", var1=x, var2=y, fresh=z)
        cut = e2.ctx.delta[z]
        ctx = e2.ctx.replace(delta={k: v for k, v in e2.ctx.delta.items() if k != z})
        lam = EtasDerivation("I-o^I", ctx, Abs(z, e2.subject),
                             TArrow(cut, d.type), (e2,))
        lam, e1 = _cross_weaken(lam, e1)
        ctx = ContextTriple({**lam.ctx.gamma, **e1.ctx.gamma}, dict(lam.ctx.delta), {})
        return EtasDerivation("E-o", ctx, App(lam.subject, e1.subject), d.type, (lam, e1))
    if r == "!":
        *dargs, dbody = d.children
        ebody = _to_etas(dbody, gen)
        delta0 = {x: TBang(t) for x, t in dbody.ctx.items()}
        f = EtasDerivation("!", ContextTriple({}, delta0, {}),
                           ebody.subject, TBang(dbody.type), (ebody,))
        for (arg, x), da in reversed(list(zip(d.subject.bindings, dargs))):
            if isinstance(arg, EVar):
                w = arg.name
                if w in _etas_names(f):
                    f = _freshen_binders(f, {w}, gen)
                f = rename_free(f, x, w)
                lin, mod = _split({k: v for k, v in da.ctx.items() if k != w})
                lin = {k: v for k, v in lin.items() if k not in f.ctx.gamma}
                mod = {k: v for k, v in mod.items() if k not in f.ctx.delta}
                if lin or mod:
                    f = transform(f, "weaken", gamma=lin, delta=mod)
            else:
                ei = _to_etas(da, gen)
                cut = f.ctx.delta[x]
                ctx = f.ctx.replace(delta={k: v for k, v in f.ctx.delta.items() if k != x})
                lam = EtasDerivation("I-o^I", ctx, Abs(x, f.subject),
                                     TArrow(cut, f.type), (f,))
                lam, ei = _cross_weaken(lam, ei)
                ctx = ContextTriple({**lam.ctx.gamma, **ei.ctx.gamma},
                                    dict(lam.ctx.delta), {})
                f = EtasDerivation("E-o", ctx, App(lam.subject, ei.subject),
                                   f.type, (lam, ei))
        used = set()
        for da in dargs:
            used |= set(da.ctx)
        lin, mod = _split({k: v for k, v in d.ctx.items() if k not in used})
        lin = {k: v for k, v in lin.items() if k not in f.ctx.gamma}
        mod = {k: v for k, v in mod.items() if k not in f.ctx.delta}
        return transform(f, "weaken", gamma=lin, delta=mod) if lin or mod else f
    raise NealCheckError(f"unknown rule {r!r}")


# ----------------------------------------------- lambda proofs to sharing

def neal_weaken(d: NealDerivation, extra: dict[str, EAType]) -> NealDerivation:
    """Add unused hypotheses, pushing them down to a slack-absorbing node."""
    extra = {k: v for k, v in extra.items() if k not in d.ctx}
    if not extra:
        return d
    r = d.rule
    if r in ("A", "!"):
        return NealDerivation(r, {**d.ctx, **extra}, d.subject, d.type, d.children)
    if r == "I-o":
        if d.subject.var in extra:
            raise NealCheckError(f"weakening name {d.subject.var} is bound here")
        c = neal_weaken(d.children[0], extra)
        return NealDerivation(r, {**d.ctx, **extra}, d.subject, d.type, (c,))
    if r == "E-o":
        f = neal_weaken(d.children[0], extra)
        return NealDerivation(r, {**d.ctx, **extra}, d.subject, d.type,
                              (f, d.children[1]))
    if r == "C":
        if d.subject.var1 in extra or d.subject.var2 in extra:
            raise NealCheckError("weakening name is bound here")
        body = neal_weaken(d.children[1], extra)
        return NealDerivation(r, {**d.ctx, **extra}, d.subject, d.type,
                              (d.children[0], body))
    raise NealCheckError(f"unknown rule {r!r}")


def _neal_rename(d: NealDerivation, old: str, new: str) -> NealDerivation:
    """Rename a free variable; new must be globally unused in d."""
    ctx = d.ctx
    if old in ctx:
        ctx = dict(ctx)
        ctx[new] = ctx.pop(old)
    subject = rename_ea(d.subject, {old: new})
    kids = tuple(_neal_rename(c, old, new) for c in d.children)
    return NealDerivation(d.rule, ctx, subject, d.type, kids)


def _axiom(name: str, t: EAType) -> NealDerivation:
    return NealDerivation("A", {name: t}, EVar(name), t)


def _contract_group(term, deriv, names, target, gen):
    """Merge the hypotheses in names into the single name target."""
    cur = names[0]
    for j, nxt_src in enumerate(names[1:], start=2):
        merged = target if j == len(names) else gen.fresh(target)
        t = deriv.ctx[cur]
        body_ctx = deriv.ctx
        rest = {k: v for k, v in body_ctx.items() if k not in (cur, nxt_src)}
        term = EContract(term, EVar(merged), cur, nxt_src)
        deriv = NealDerivation("C", {merged: t, **rest}, term, deriv.type,
                               (_axiom(merged, t), deriv))
        cur = merged
    if len(names) == 1:
        term = rename_ea(term, {cur: target})
        deriv = _neal_rename(deriv, cur, target)
    return term, deriv


def etas_to_neal(d: EtasDerivation) -> tuple[EATerm, NealDerivation]:
    """Recover an explicit-sharing term and proof from a typing proof.

    The derivation must have an empty parking part at the root.  The frugal
    readback of the returned term is the original subject up to bound-name
    choice, and the returned proof's context is exactly the union of the
    linear and modal parts.
    """
    if d.ctx.theta:
        raise EtasCheckError("root judgement still has parked hypotheses")
    gen = NameGen(avoid=_etas_names(d))
    term, nd, copies = _to_neal(d, gen)
    assert not any(copies.values()), "parked hypotheses escaped the translation"
    full = {**d.ctx.gamma, **d.ctx.delta}
    nd = neal_weaken(nd, {k: v for k, v in full.items() if k not in nd.ctx})
    return term, nd


def _to_neal(d: EtasDerivation, gen: NameGen):
    r = d.rule
    if r == "A^L":
        x = d.subject.name
        return EVar(x), _axiom(x, d.ctx.gamma[x]), {}
    if r == "A^I":
        x = d.subject.name
        return EVar(x), _axiom(x, d.ctx.delta[x]), {}
    if r == "A^P":
        x = d.subject.name
        y = gen.fresh(x)
        return EVar(y), _axiom(y, d.ctx.theta[x]), {x: [y]}
    if r == "Const":
        raise EtasCheckError("constants have no explicit-sharing counterpart")
    if r in ("I-o^L", "I-o^I"):
        term, nd, copies = _to_neal(d.children[0], gen)
        x = d.subject.var
        if x not in nd.ctx:
            # unused binder; rename it if the subject shadows the name
            # somewhere below, since sharing terms keep binders distinct
            if x in all_names(term):
                x = gen.fresh(x)
            nd = neal_weaken(nd, {x: d.type.left})
        ctx = {k: v for k, v in nd.ctx.items() if k != x}
        term = EAbs(x, term)
        return term, NealDerivation("I-o", ctx, term, d.type, (nd,)), copies
    if r == "E-o":
        t1, n1, c1 = _to_neal(d.children[0], gen)
        t2, n2, c2 = _to_neal(d.children[1], gen)
        shared = sorted(set(n1.ctx) & set(n2.ctx))
        pairs = []
        for z in shared:
            z1, z2 = gen.fresh(z), gen.fresh(z)
            t1, n1 = rename_ea(t1, {z: z1}), _neal_rename(n1, z, z1)
            t2, n2 = rename_ea(t2, {z: z2}), _neal_rename(n2, z, z2)
            pairs.append((z, z1, z2))
        term = EApp(t1, t2)
        nd = NealDerivation("E-o", {**n1.ctx, **n2.ctx}, term, d.type, (n1, n2))
        for z, z1, z2 in pairs:
            t = nd.ctx[z1]
            rest = {k: v for k, v in nd.ctx.items() if k not in (z1, z2)}
            term = EContract(term, EVar(z), z1, z2)
            nd = NealDerivation("C", {z: t, **rest}, term, d.type,
                                (_axiom(z, t), nd))
        copies = dict(c1)
        for k, v in c2.items():
            copies[k] = copies.get(k, []) + v
        return term, nd, copies
    if r == "!":
        t1, n1, c1 = _to_neal(d.children[0], gen)
        entries = sorted(n1.ctx.items())
        inner = {z: gen.fresh(z) for z, _ in entries}
        body = rename_ea(t1, inner)
        n1r = n1
        for z, zt in inner.items():
            n1r = _neal_rename(n1r, z, zt)
        binds = tuple((EVar(z), inner[z]) for z, _ in entries)
        term = EPromote(body, binds)
        args = tuple(_axiom(z, TBang(t)) for z, t in entries)
        ctx = {z: TBang(t) for z, t in entries}
        nd = NealDerivation("!", ctx, term, TBang(n1.type), (*args, n1r))
        for x in sorted(c1):
            ys = [y for y in c1[x] if y in nd.ctx]
            if ys:
                term, nd = _contract_group(term, nd, ys, x, gen)
        return term, nd, {}
    raise EtasCheckError(f"rule {r!r} has no explicit-sharing counterpart")


# ----------------------------------------------------------- cbv simulation

@dataclass(frozen=True)
class SimulationResult:
    """Outcome of searching for a sharing-level match of one CBV step.

    status is "ok" (path holds the sequence, first element the start term),
    "no-redex" (the readback is already a CBV normal form), or "budget"
    (the search ran out before finding a match; not evidence of absence).
    """

    status: str
    path: tuple[EATerm, ...] = ()
    target: Term | None = None


def _leftmost_cbv(t: Term):
    if isinstance(t, App):
        if isinstance(t.fn, Abs) and is_value(t.arg):
            return substitute(t.fn.body, t.fn.var, t.arg), True
        fn, hit = _leftmost_cbv(t.fn)
        if hit:
            return App(fn, t.arg), True
        arg, hit = _leftmost_cbv(t.arg)
        return App(t.fn, arg), hit
    if isinstance(t, Abs):
        body, hit = _leftmost_cbv(t.body)
        return Abs(t.var, body) if hit else t, hit
    return t, False


def simulate_cbv(m: EATerm, budget: int = 64) -> SimulationResult:
    """Find sharing-level steps matching one CBV step of the readback.

    Reduces the leftmost CBV redex of translate_sharp(m), then searches
    breadth-first through the sharing rewrites for a term whose readback is
    that reduct, spending at most `budget` node expansions.
    """
    target, hit = _leftmost_cbv(translate_sharp(m))
    if not hit:
        return SimulationResult("no-redex")
    goal = canonical(target)
    start = canonical(m)
    queue = deque([(m, (m,))])
    seen = {start}
    spent = 0
    while queue:
        if spent >= budget:
            return SimulationResult("budget", target=target)
        cur, path = queue.popleft()
        spent += 1
        for _, nxt in ea_step(cur):
            key = canonical(nxt)
            if key in seen:
                continue
            seen.add(key)
            if canonical(translate_sharp(nxt)) == goal:
                return SimulationResult("ok", path + (nxt,), target)
            queue.append((nxt, path + (nxt,)))
    return SimulationResult("budget", target=target)
