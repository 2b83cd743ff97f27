"""Typed derivations over three-part contexts.

A judgement splits its context into a linear part, a modal part, and a
parking part.  Linear and parking entries carry linear types, modal
entries carry banged types, and the three domains are disjoint.  A
derivation whose parking part is empty is a typing.

The rule tags are:

  A^L     linear axiom, subject drawn from the linear part
  A^P     parking axiom, subject drawn from the parking part
  A^I     modal axiom, subject drawn from the modal part (shorthand for
          a linear axiom followed by one bang per leading ! of its type)
  I-o^L   abstraction whose binder leaves the linear part
  I-o^I   abstraction whose binder leaves the modal part
  E-o     application; linear parts split, modal and parking parts shared
  !       bang introduction; every premise entry moves, banged, into the
          modal part, and fresh slack may join each slot
  Const   algebra constant, any context

Each node stores its full conclusion, so weakening is built into the
leaves and the bang slots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .eatypes import EAType, TArrow, TBang, is_modal, strip_bangs, type_to_str
from .terms import (
    Term, Var, Abs, App, Const, NameGen, all_names, free_vars, is_value,
    substitute, subterm_at, term_to_str,
)


class EtasCheckError(ValueError):
    pass


@dataclass(frozen=True)
class ContextTriple:
    gamma: dict[str, EAType] = field(default_factory=dict)
    delta: dict[str, EAType] = field(default_factory=dict)
    theta: dict[str, EAType] = field(default_factory=dict)

    def validate(self):
        for name, t in self.gamma.items():
            if is_modal(t):
                raise EtasCheckError(f"linear slot holds modal {name}: {type_to_str(t)}")
        for name, t in self.theta.items():
            if is_modal(t):
                raise EtasCheckError(f"parking slot holds modal {name}: {type_to_str(t)}")
        for name, t in self.delta.items():
            if not is_modal(t):
                raise EtasCheckError(f"modal slot holds linear {name}: {type_to_str(t)}")
        doms = [set(self.gamma), set(self.delta), set(self.theta)]
        if doms[0] & doms[1] or doms[0] & doms[2] or doms[1] & doms[2]:
            raise EtasCheckError(f"context slots overlap: {self}")

    def names(self) -> set[str]:
        return set(self.gamma) | set(self.delta) | set(self.theta)

    def lookup(self, name: str):
        if name in self.gamma:
            return "gamma", self.gamma[name]
        if name in self.delta:
            return "delta", self.delta[name]
        if name in self.theta:
            return "theta", self.theta[name]
        return None, None

    def replace(self, gamma=None, delta=None, theta=None) -> "ContextTriple":
        return ContextTriple(
            dict(self.gamma if gamma is None else gamma),
            dict(self.delta if delta is None else delta),
            dict(self.theta if theta is None else theta))

    def __str__(self):
        def part(d):
            return ", ".join(f"{x} : {type_to_str(t)}" for x, t in sorted(d.items()))
        return f"{part(self.gamma)} | {part(self.delta)} | {part(self.theta)}"


@dataclass(frozen=True)
class EtasDerivation:
    rule: str
    ctx: ContextTriple
    subject: Term
    type: EAType
    children: tuple["EtasDerivation", ...] = ()

    def conclusion(self) -> str:
        return f"{self.ctx} |- {term_to_str(self.subject)} : {type_to_str(self.type)}"


RULES = ("A^L", "A^P", "A^I", "I-o^L", "I-o^I", "E-o", "!", "Const")


# -------------------------------------------------------------- validation

def check_etas_derivation(d: EtasDerivation, signature=None) -> None:
    """Raise EtasCheckError unless d is a valid derivation."""
    d.ctx.validate()
    r = d.rule
    if r == "A^L":
        _expect(isinstance(d.subject, Var), d, "linear axiom subject must be a variable")
        _expect(not d.children, d, "axiom has no premises")
        _expect(d.ctx.gamma.get(d.subject.name) == d.type, d,
                "subject type missing from the linear part")
    elif r == "A^P":
        _expect(isinstance(d.subject, Var), d, "parking axiom subject must be a variable")
        _expect(not d.children, d, "axiom has no premises")
        _expect(d.ctx.theta.get(d.subject.name) == d.type, d,
                "subject type missing from the parking part")
    elif r == "A^I":
        _expect(isinstance(d.subject, Var), d, "modal axiom subject must be a variable")
        _expect(not d.children, d, "axiom has no premises")
        _expect(d.ctx.delta.get(d.subject.name) == d.type, d,
                "subject type missing from the modal part")
    elif r == "Const":
        _expect(isinstance(d.subject, Const), d, "constant axiom needs a constant subject")
        _expect(not d.children, d, "axiom has no premises")
        if signature is None:
            raise EtasCheckError(f"constant {d.subject.name} without a signature")
        _expect(signature.admits_type(d.subject.name, d.type), d,
                f"{d.subject.name} cannot have type {type_to_str(d.type)}")
    elif r in ("I-o^L", "I-o^I"):
        _expect(isinstance(d.subject, Abs), d, "abstraction rule needs an abstraction")
        _expect(len(d.children) == 1, d, "abstraction rule has one premise")
        c = d.children[0]
        check_etas_derivation(c, signature)
        _expect(isinstance(d.type, TArrow), d, "abstraction type must be an arrow")
        x = d.subject.var
        _expect(c.subject == d.subject.body, d, "premise subject mismatch")
        _expect(c.type == d.type.right, d, "premise type mismatch")
        _expect(x not in d.ctx.names(), d, "binder escapes into the conclusion")
        if r == "I-o^L":
            want = dict(d.ctx.gamma)
            want[x] = d.type.left
            _expect(c.ctx.gamma == want and c.ctx.delta == d.ctx.delta
                    and c.ctx.theta == d.ctx.theta, d, "premise context mismatch")
        else:
            want = dict(d.ctx.delta)
            want[x] = d.type.left
            _expect(is_modal(d.type.left), d, "modal binder needs a banged type")
            _expect(c.ctx.delta == want and c.ctx.gamma == d.ctx.gamma
                    and c.ctx.theta == d.ctx.theta, d, "premise context mismatch")
    elif r == "E-o":
        _expect(isinstance(d.subject, App), d, "application rule needs an application")
        _expect(len(d.children) == 2, d, "application rule has two premises")
        f, a = d.children
        check_etas_derivation(f, signature)
        check_etas_derivation(a, signature)
        _expect(f.subject == d.subject.fn and a.subject == d.subject.arg, d,
                "premise subjects mismatch")
        _expect(isinstance(f.type, TArrow) and f.type.right == d.type
                and f.type.left == a.type, d, "arrow elimination types mismatch")
        _expect(f.ctx.delta == a.ctx.delta == d.ctx.delta, d,
                "modal parts must be shared")
        _expect(f.ctx.theta == a.ctx.theta == d.ctx.theta, d,
                "parking parts must be shared")
        _expect(not (set(f.ctx.gamma) & set(a.ctx.gamma)), d,
                "linear parts must be disjoint")
        merged = dict(f.ctx.gamma)
        merged.update(a.ctx.gamma)
        _expect(merged == d.ctx.gamma, d, "linear parts must join into the conclusion")
    elif r == "!":
        _expect(len(d.children) == 1, d, "bang rule has one premise")
        c = d.children[0]
        check_etas_derivation(c, signature)
        _expect(c.subject == d.subject, d, "bang keeps the subject")
        _expect(d.type == TBang(c.type), d, "bang adds one ! to the type")
        for name, t in list(c.ctx.gamma.items()) + list(c.ctx.delta.items()) \
                + list(c.ctx.theta.items()):
            _expect(d.ctx.delta.get(name) == TBang(t), d,
                    f"premise entry {name} must appear banged in the modal part")
    else:
        raise EtasCheckError(f"unknown rule {r!r}")


def _expect(cond, d, msg):
    if not cond:
        raise EtasCheckError(f"{msg}; at node [{d.rule}] {d.conclusion()}")


def is_typing(d: EtasDerivation) -> bool:
    """Typings are the judgements whose parking part is empty."""
    return not d.ctx.theta


# -------------------------------------------------------------- measures

@dataclass(frozen=True)
class LevelProfile:
    sizes: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.sizes) - 1

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def size(self, i: int) -> int:
        return self.sizes[i] if 0 <= i < len(self.sizes) else 0


def _pad(a, b):
    n = max(len(a), len(b))
    return a + (0,) * (n - len(a)), b + (0,) * (n - len(b))


def measures(d: EtasDerivation) -> LevelProfile:
    """Per-level node counts.  Axioms weigh one at their own depth, the
    bang rule shifts its premise one level down and weighs nothing."""
    r = d.rule
    if r in ("A^L", "A^P", "Const"):
        return LevelProfile((1,))
    if r == "A^I":
        n, _ = strip_bangs(d.type)
        return LevelProfile((0,) * n + (1,))
    if r in ("I-o^L", "I-o^I"):
        p = measures(d.children[0]).sizes
        return LevelProfile((p[0] + 1,) + p[1:])
    if r == "E-o":
        p, q = _pad(measures(d.children[0]).sizes, measures(d.children[1]).sizes)
        return LevelProfile((p[0] + q[0] + 1,) + tuple(x + y for x, y in zip(p[1:], q[1:])))
    if r == "!":
        return LevelProfile((0,) + measures(d.children[0]).sizes)
    raise EtasCheckError(f"unknown rule {r!r}")


# -------------------------------------------------------------- transforms

def transform(d: EtasDerivation, op: str, **kw) -> EtasDerivation:
    """Structure-preserving derivation surgery.

    op="weaken": add fresh entries (gamma=..., delta=..., theta=...).
    op="shift": move one linear entry (var=...) into the parking part.
    op="contract": merge var1 and var2, both parking or both modal, into
    fresh (the slot keeps its kind).  All three preserve the measure
    profile; contract renames inside the subject, the others keep it.
    """
    if op == "weaken":
        return _weaken(d, dict(kw.get("gamma") or {}), dict(kw.get("delta") or {}),
                       dict(kw.get("theta") or {}))
    if op == "shift":
        return _shift(d, kw["var"])
    if op == "contract":
        return _contract(d, kw["var1"], kw["var2"], kw["fresh"])
    raise ValueError(f"unknown transform {op!r}")


def _weaken(d, gamma, delta, theta):
    if not (gamma or delta or theta):
        return d
    new = set(gamma) | set(delta) | set(theta)
    clash = new & (d.ctx.names() | free_vars(d.subject))
    if clash:
        raise EtasCheckError(f"weakening by names already in use: {sorted(clash)}")
    for t in gamma.values():
        if is_modal(t):
            raise EtasCheckError("weakening a modal type into the linear part")
    for t in theta.values():
        if is_modal(t):
            raise EtasCheckError("weakening a modal type into the parking part")
    for t in delta.values():
        if not is_modal(t):
            raise EtasCheckError("weakening a linear type into the modal part")
    bound_clash = new & all_names(d.subject)
    if bound_clash:
        d = _freshen_binders(d, bound_clash, NameGen(_names_of(d) | new))
    return _weaken_r(d, gamma, delta, theta)


def _weaken_r(d, gamma, delta, theta):
    ctx = ContextTriple({**d.ctx.gamma, **gamma}, {**d.ctx.delta, **delta},
                        {**d.ctx.theta, **theta})
    if d.rule in ("A^L", "A^P", "A^I", "Const") or d.rule == "!":
        # leaves carry weakening; a bang absorbs it into its conclusion slots
        return EtasDerivation(d.rule, ctx, d.subject, d.type, d.children)
    if d.rule in ("I-o^L", "I-o^I"):
        return EtasDerivation(d.rule, ctx, d.subject, d.type,
                              (_weaken_r(d.children[0], gamma, delta, theta),))
    if d.rule == "E-o":
        f, a = d.children
        # the linear extension may enter only one premise
        return EtasDerivation(d.rule, ctx, d.subject, d.type,
                              (_weaken_r(f, gamma, delta, theta),
                               _weaken_r(a, {}, delta, theta)))
    raise EtasCheckError(f"unknown rule {d.rule!r}")


def _freshen_binders(d, avoid, gen):
    if d.rule in ("I-o^L", "I-o^I"):
        b = d.subject.var
        c = d.children[0]
        if b in avoid:
            nb = gen.fresh(b)
            c = rename_free(c, b, nb)
            b = nb
        c = _freshen_binders(c, avoid, gen)
        return EtasDerivation(d.rule, d.ctx, Abs(b, c.subject), d.type, (c,))
    kids = tuple(_freshen_binders(c, avoid, gen) for c in d.children)
    if not kids:
        return d
    if d.rule == "E-o":
        subject = App(kids[0].subject, kids[1].subject)
    else:
        subject = kids[0].subject
    return EtasDerivation(d.rule, d.ctx, subject, d.type, kids)


def _shift(d, x):
    kind, t = d.ctx.lookup(x)
    if kind != "gamma":
        raise EtasCheckError(f"{x} is not in the linear part")
    gamma = dict(d.ctx.gamma)
    del gamma[x]
    theta = dict(d.ctx.theta)
    theta[x] = t
    ctx = ContextTriple(gamma, d.ctx.delta, theta)
    if d.rule == "A^L":
        rule = "A^P" if d.subject == Var(x) else "A^L"
        return EtasDerivation(rule, ctx, d.subject, d.type)
    if d.rule in ("A^P", "A^I", "Const", "!"):
        return EtasDerivation(d.rule, ctx, d.subject, d.type, d.children)
    if d.rule in ("I-o^L", "I-o^I"):
        return EtasDerivation(d.rule, ctx, d.subject, d.type,
                              (_shift(d.children[0], x),))
    if d.rule == "E-o":
        f, a = d.children
        if x in f.ctx.gamma:
            f2 = _shift(f, x)
            a2 = _weaken_r(a, {}, {}, {x: t})
        else:
            f2 = _weaken_r(f, {}, {}, {x: t})
            a2 = _shift(a, x)
        return EtasDerivation(d.rule, ctx, d.subject, d.type, (f2, a2))
    raise EtasCheckError(f"unknown rule {d.rule!r}")


def rename_free(d: EtasDerivation, old: str, new: str) -> EtasDerivation:
    """Rename a free variable throughout a derivation.  new must be unused."""
    if new in d.ctx.names() or new in all_names(d.subject):
        raise EtasCheckError(f"rename target {new} already in use")
    return _rename_r(d, old, new)


def _rename_r(d, old, new):
    def fix(part):
        if old in part:
            out = dict(part)
            out[new] = out.pop(old)
            return out
        return part

    ctx = ContextTriple(fix(d.ctx.gamma), fix(d.ctx.delta), fix(d.ctx.theta))
    subject = substitute(d.subject, old, Var(new))
    kids = tuple(_rename_r(c, old, new) for c in d.children)
    return EtasDerivation(d.rule, ctx, subject, d.type, kids)


def _contract(d, x, y, z):
    kx, tx = d.ctx.lookup(x)
    ky, ty = d.ctx.lookup(y)
    if tx != ty or kx != ky or kx not in ("theta", "delta"):
        raise EtasCheckError(
            f"contract needs {x},{y} of one type, both parking or both modal")
    if z in d.ctx.names() or z in all_names(d.subject):
        raise EtasCheckError(f"contract target {z} already in use")
    if kx == "theta":
        return _contract_parking(d, x, y, z, tx)
    return _contract_modal(d, x, y, z, tx)


def _merge_ctx(ctx, x, y, z, t, slot):
    parts = {"gamma": dict(ctx.gamma), "delta": dict(ctx.delta),
             "theta": dict(ctx.theta)}
    parts[slot].pop(x, None)
    parts[slot].pop(y, None)
    parts[slot][z] = t
    return ContextTriple(parts["gamma"], parts["delta"], parts["theta"])


def _subst2(subject, x, y, z):
    return substitute(substitute(subject, x, Var(z)), y, Var(z))


def _contract_parking(d, x, y, z, t):
    ctx = _merge_ctx(d.ctx, x, y, z, t, "theta")
    if d.rule in ("A^L", "A^P", "A^I", "Const"):
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type)
    if d.rule == "!":
        # parked slack of a bang conclusion cannot occur under the box
        return EtasDerivation(d.rule, ctx, d.subject, d.type, d.children)
    if d.rule in ("I-o^L", "I-o^I"):
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type,
                              (_contract_parking(d.children[0], x, y, z, t),))
    if d.rule == "E-o":
        kids = tuple(_contract_parking(c, x, y, z, t) for c in d.children)
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type, kids)
    raise EtasCheckError(f"unknown rule {d.rule!r}")


def _contract_modal(d, x, y, z, t):
    ctx = _merge_ctx(d.ctx, x, y, z, t, "delta")
    if d.rule in ("A^L", "A^P", "A^I", "Const"):
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type)
    if d.rule in ("I-o^L", "I-o^I"):
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type,
                              (_contract_modal(d.children[0], x, y, z, t),))
    if d.rule == "E-o":
        kids = tuple(_contract_modal(c, x, y, z, t) for c in d.children)
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type, kids)
    if d.rule == "!":
        c = d.children[0]
        kind_x, tx_in = c.ctx.lookup(x)
        kind_y, ty_in = c.ctx.lookup(y)
        if kind_x is None and kind_y is None:
            # both are conclusion slack
            return EtasDerivation(d.rule, ctx, d.subject, d.type, d.children)
        if kind_x is None or kind_y is None:
            # one under the box, one slack: rename the boxed one to z
            inner = y if kind_x is None else x
            c2 = rename_free(c, inner, z)
            return EtasDerivation(d.rule, ctx, substitute(d.subject, inner, Var(z)),
                                  d.type, (c2,))
        # both occur under the box at the unbanged type
        if kind_x == "gamma":
            c = _shift(c, x)
            kind_x = "theta"
        if kind_y == "gamma":
            c = _shift(c, y)
            kind_y = "theta"
        if kind_x != kind_y:
            raise EtasCheckError("contract saw one linear and one modal premise entry")
        if kind_x == "theta":
            c2 = _contract_parking(c, x, y, z, tx_in)
        else:
            c2 = _contract_modal(c, x, y, z, tx_in)
        return EtasDerivation(d.rule, ctx, _subst2(d.subject, x, y, z), d.type, (c2,))
    raise EtasCheckError(f"unknown rule {d.rule!r}")


# -------------------------------------------------------- substitution

def substitute_derivation(pi: EtasDerivation, x: str,
                          rho: EtasDerivation, gen: NameGen | None = None
                          ) -> EtasDerivation:
    """Replace the hypothesis x by the derivation rho.

    The slot x occupies in pi's conclusion decides the flavour: linear
    entries admit any argument derivation, parking entries need rho with
    an empty linear part, modal entries additionally need a value
    subject.  rho's modal and parking parts must match pi's minus x,
    and rho's linear part must be disjoint from pi's.
    """
    if gen is None:
        gen = NameGen(_names_of(pi) | _names_of(rho))
    kind, t = pi.ctx.lookup(x)
    if kind == "gamma":
        return _subst_linear(pi, x, rho, gen)
    if kind == "theta":
        if rho.ctx.gamma:
            raise EtasCheckError("parking substitution needs an argument "
                                 "derivation with empty linear part")
        return _subst_parking(pi, x, rho, gen)
    if kind == "delta":
        if not _is_valueish(rho.subject):
            raise EtasCheckError("modal substitution needs a value subject")
        return _subst_modal(pi, x, rho, gen)
    raise EtasCheckError(f"{x} not free in the conclusion of pi")


def _is_valueish(t):
    if is_value(t):
        return True
    head = t
    while isinstance(head, App):
        head = head.fn
    return isinstance(head, Const)


def _names_of(d: EtasDerivation) -> set[str]:
    out = set(d.ctx.names()) | all_names(d.subject)
    for c in d.children:
        out |= _names_of(c)
    return out


def _drop(part, x):
    if x in part:
        out = dict(part)
        del out[x]
        return out
    return dict(part)


def _fresh_binder(pi_body, b, rho, gen):
    """Alpha-rename the binder b away from rho's names when needed."""
    if b in rho.ctx.names() or b in all_names(rho.subject):
        nb = gen.fresh(b)
        return rename_free(pi_body, b, nb), nb
    return pi_body, b


def _subst_linear(pi, x, rho, gen):
    r = pi.rule
    if r == "A^L" and pi.subject == Var(x):
        return _weaken(rho, _drop(pi.ctx.gamma, x), {}, {})
    if r in ("A^L", "A^P", "A^I", "Const", "!"):
        # x is slack here (for a bang, it sits in the conclusion slot)
        ctx = pi.ctx.replace(gamma={**_drop(pi.ctx.gamma, x), **rho.ctx.gamma})
        return EtasDerivation(r, ctx, pi.subject, pi.type, pi.children)
    if r in ("I-o^L", "I-o^I"):
        body, b = _fresh_binder(pi.children[0], pi.subject.var, rho, gen)
        arg = _weaken(rho, {}, {b: pi.type.left}, {}) if r == "I-o^I" else rho
        c = _subst_linear(body, x, arg, gen)
        ctx = pi.ctx.replace(gamma={**_drop(pi.ctx.gamma, x), **rho.ctx.gamma})
        return EtasDerivation(r, ctx, Abs(b, c.subject), pi.type, (c,))
    if r == "E-o":
        f, a = pi.children
        if x in f.ctx.gamma:
            f = _subst_linear(f, x, rho, gen)
        else:
            a = _subst_linear(a, x, rho, gen)
        ctx = pi.ctx.replace(gamma={**_drop(pi.ctx.gamma, x), **rho.ctx.gamma})
        return EtasDerivation(r, ctx, App(f.subject, a.subject), pi.type, (f, a))
    raise EtasCheckError(f"unknown rule {r!r}")


def _subst_parking(pi, x, rho, gen):
    r = pi.rule
    if r == "A^P" and pi.subject == Var(x):
        return _weaken(rho, pi.ctx.gamma, {}, {})
    if r in ("A^L", "A^P", "A^I", "Const", "!"):
        return EtasDerivation(r, pi.ctx.replace(theta=_drop(pi.ctx.theta, x)),
                              pi.subject, pi.type, pi.children)
    if r in ("I-o^L", "I-o^I"):
        body, b = _fresh_binder(pi.children[0], pi.subject.var, rho, gen)
        arg = _weaken(rho, {}, {b: pi.type.left}, {}) if r == "I-o^I" else rho
        c = _subst_parking(body, x, arg, gen)
        ctx = pi.ctx.replace(theta=_drop(pi.ctx.theta, x))
        return EtasDerivation(r, ctx, Abs(b, c.subject), pi.type, (c,))
    if r == "E-o":
        f = _subst_parking(pi.children[0], x, rho, gen)
        a = _subst_parking(pi.children[1], x, rho, gen)
        ctx = pi.ctx.replace(theta=_drop(pi.ctx.theta, x))
        return EtasDerivation(r, ctx, App(f.subject, a.subject), pi.type, (f, a))
    raise EtasCheckError(f"unknown rule {r!r}")


def _subst_modal(pi, x, rho, gen):
    r = pi.rule
    if r == "A^I" and pi.subject == Var(x):
        return _weaken(rho, pi.ctx.gamma, {}, {})
    if r in ("A^L", "A^P", "A^I", "Const"):
        ctx = pi.ctx.replace(delta=_drop(pi.ctx.delta, x),
                             gamma={**pi.ctx.gamma, **rho.ctx.gamma})
        return EtasDerivation(r, ctx, pi.subject, pi.type)
    if r in ("I-o^L", "I-o^I"):
        body, b = _fresh_binder(pi.children[0], pi.subject.var, rho, gen)
        arg = _weaken(rho, {}, {b: pi.type.left}, {}) if r == "I-o^I" else rho
        c = _subst_modal(body, x, arg, gen)
        ctx = pi.ctx.replace(delta=_drop(pi.ctx.delta, x),
                             gamma={**pi.ctx.gamma, **rho.ctx.gamma})
        return EtasDerivation(r, ctx, Abs(b, c.subject), pi.type, (c,))
    if r == "E-o":
        chi = _strengthen_arg(rho, gen)
        f = _subst_modal(pi.children[0], x, chi, gen)
        a = _subst_modal(pi.children[1], x, chi, gen)
        ctx = pi.ctx.replace(delta=_drop(pi.ctx.delta, x))
        out = EtasDerivation(r, ctx, App(f.subject, a.subject), pi.type, (f, a))
        return _weaken(out, rho.ctx.gamma, {}, {})
    if r == "!":
        return _subst_modal_bang(pi, x, rho, gen)
    raise EtasCheckError(f"unknown rule {r!r}")


def _strengthen_arg(rho, gen):
    """Rebuild rho with an empty linear slot (bang slack is unused)."""
    if not rho.ctx.gamma:
        return rho
    rho = _bang_rooted(rho, gen)
    return EtasDerivation("!", rho.ctx.replace(gamma={}), rho.subject, rho.type,
                          rho.children)


def _bang_rooted(rho, gen):
    """Normalize a modal-typed derivation so its last rule is a bang."""
    if rho.rule == "!":
        return rho
    if rho.rule == "A^I":
        v = rho.subject.name
        n, core = strip_bangs(rho.type)
        d = EtasDerivation("A^L", ContextTriple({v: core}, {}, {}), rho.subject, core)
        t = core
        for _ in range(n - 1):
            t = TBang(t)
            d = EtasDerivation("!", ContextTriple({}, {v: t}, {}), rho.subject, t, (d,))
        t = TBang(t)
        ctx = ContextTriple(dict(rho.ctx.gamma),
                            {**_drop(rho.ctx.delta, v), v: t},
                            dict(rho.ctx.theta))
        return EtasDerivation("!", ctx, rho.subject, t, (d,))
    raise EtasCheckError(f"no bang-rooted form for rule {rho.rule!r} "
                         f"at type {type_to_str(rho.type)}")


def _subst_modal_bang(pi, x, rho, gen):
    phi = pi.children[0]
    kind, _ = phi.ctx.lookup(x)
    if kind is None:
        # x is slack in the conclusion slot; the box never uses it
        ctx = pi.ctx.replace(delta=_drop(pi.ctx.delta, x),
                             gamma={**pi.ctx.gamma, **rho.ctx.gamma})
        return EtasDerivation("!", ctx, pi.subject, pi.type, pi.children)
    rho = _bang_rooted(rho, gen)
    psi = rho.children[0]
    # park the linear premise entries on both sides, then merge contexts
    xi = phi
    for v in list(xi.ctx.gamma):
        xi = _shift(xi, v)
    chi = psi
    for v in list(chi.ctx.gamma):
        chi = _shift(chi, v)
    delta_star = {**_drop(xi.ctx.delta, x), **chi.ctx.delta}
    theta_star = {**_drop(xi.ctx.theta, x), **chi.ctx.theta}
    xi = _weaken(xi, {},
                 {k: v for k, v in delta_star.items() if k not in xi.ctx.delta},
                 {k: v for k, v in theta_star.items() if k not in xi.ctx.theta})
    chi = _weaken(chi, {},
                  {k: v for k, v in delta_star.items() if k not in chi.ctx.delta},
                  {k: v for k, v in theta_star.items() if k not in chi.ctx.theta})
    mu = substitute_derivation(xi, x, chi, gen)
    # box the merged body and restore the conclusion slots
    banged = {v: TBang(t) for v, t in
              list(mu.ctx.gamma.items()) + list(mu.ctx.delta.items())
              + list(mu.ctx.theta.items())}
    delta_out = _drop(pi.ctx.delta, x)
    for v, t in banged.items():
        if v in delta_out and delta_out[v] != t:
            raise EtasCheckError("merged modal entry clashes with the conclusion")
        delta_out[v] = t
    ctx = ContextTriple({**pi.ctx.gamma, **rho.ctx.gamma}, delta_out,
                        dict(pi.ctx.theta))
    return EtasDerivation("!", ctx, mu.subject, TBang(mu.type), (mu,))


# ---------------------------------------------------------- subject reduction

def reduce_derivation(d: EtasDerivation, occ,
                      signature=None) -> tuple[int, EtasDerivation]:
    """Step the beta redex at the subject occurrence occ.

    Returns the depth (number of enclosing bangs in the derivation) at
    which the rewrite happened, together with the reduced derivation.
    The conclusion's contexts and type are untouched.
    """
    red = subterm_at(d.subject, occ)
    if not (isinstance(red, App) and isinstance(red.fn, Abs)):
        raise EtasCheckError(f"no beta redex at occurrence {occ}")
    gen = NameGen(_names_of(d))
    level_box = []

    def rec(node, path, depth):
        if node.rule == "!":
            c = rec(node.children[0], path, depth + 1)
            return EtasDerivation("!", node.ctx, c.subject, node.type, (c,))
        if not path:
            if node.rule != "E-o":
                raise EtasCheckError(f"occurrence {occ} is not an application node")
            fun, arg = node.children
            if fun.rule not in ("I-o^L", "I-o^I"):
                raise EtasCheckError(f"redex head derives by {fun.rule}, not an "
                                     "abstraction rule")
            level_box.append(depth)
            x = fun.subject.var
            body = fun.children[0]
            if fun.rule == "I-o^L":
                return _subst_linear(body, x, arg, gen)
            if not (is_value(arg.subject, signature) or _is_valueish(arg.subject)):
                raise EtasCheckError("modal beta step needs a value argument")
            return _subst_modal(body, x, arg, gen)
        i, rest = path[0], path[1:]
        if node.rule in ("I-o^L", "I-o^I"):
            if i != 0:
                raise EtasCheckError(f"bad occurrence {occ}")
            c = rec(node.children[0], rest, depth)
            return EtasDerivation(node.rule, node.ctx, Abs(node.subject.var, c.subject),
                                  node.type, (c,))
        if node.rule == "E-o":
            f, a = node.children
            if i == 0:
                f = rec(f, rest, depth)
            elif i == 1:
                a = rec(a, rest, depth)
            else:
                raise EtasCheckError(f"bad occurrence {occ}")
            return EtasDerivation(node.rule, node.ctx, App(f.subject, a.subject),
                                  node.type, (f, a))
        raise EtasCheckError(f"occurrence {occ} walks through rule {node.rule!r}")

    out = rec(d, tuple(occ), 0)
    return level_box[0], out
