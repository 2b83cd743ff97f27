"""Unification of type schemes.

Recursive dispatch over the shapes of the two schemes: equal variables
match silently; a variable binds to any scheme it does not occur in;
an arrow meets a banged scheme by forcing that exponent to zero; two
banged schemes equate their exponents and recurse on the bodies; two
arrows unify left sides first, apply the result eagerly to the right
sides, and compose.  Emitted constraints mention only exponents; the
constraint sets attached to the inputs ride along untouched.

Failures are explicit results carrying a reason: occurs (a variable
inside the other scheme) or clash (incompatible shapes).
"""

from __future__ import annotations

from dataclasses import dataclass

from .schemes import (
    NameSource, SAlg, SArrow, SBang, SVar, Scheme, Substitution, TypeScheme,
    ceq, ceq0, exp_const, scheme_to_str, scheme_vars, _apply,
)


@dataclass(frozen=True)
class UnifyFailure:
    reason: str          # "occurs" | "clash"
    left: Scheme
    right: Scheme

    def __str__(self):
        return (f"unification failed ({self.reason}): "
                f"{scheme_to_str(self.left)} vs {scheme_to_str(self.right)}")


def unify(z1: TypeScheme | Scheme, z2: TypeScheme | Scheme,
          gen: NameSource | None = None) -> Substitution | UnifyFailure:
    """Most general substitution making two schemes equal up to exponents."""
    s1 = z1.scheme if isinstance(z1, TypeScheme) else z1
    s2 = z2.scheme if isinstance(z2, TypeScheme) else z2
    if gen is None:
        gen = NameSource()
    out = _unify(s1, s2, gen)
    if isinstance(out, UnifyFailure):
        return out
    mapping, constraints, _ = out
    return Substitution(mapping, frozenset(constraints))


def unify_with_instance(z1, z2, gen: NameSource | None = None):
    """Like unify, but also returns a common instance scheme: the image
    of both sides under the substitution, with merged bang exponents
    chosen as the side with fewer summands (ties go left)."""
    s1 = z1.scheme if isinstance(z1, TypeScheme) else z1
    s2 = z2.scheme if isinstance(z2, TypeScheme) else z2
    if gen is None:
        gen = NameSource()
    out = _unify(s1, s2, gen)
    if isinstance(out, UnifyFailure):
        return out
    mapping, constraints, omega = out
    return Substitution(mapping, frozenset(constraints)), omega


def _atoms(e):
    c, k = e.flatten()
    return sum(c.values()) + (1 if k else 0)


def _pick(p, q):
    return q if _atoms(q) < _atoms(p) else p


def _unify(s1, s2, gen):
    """Returns (mapping, constraint set, common instance) or UnifyFailure."""
    if isinstance(s1, SVar) and isinstance(s2, SVar) and s1.name == s2.name:
        return {}, set(), s1
    if isinstance(s1, SVar):
        if s1.name in scheme_vars(s2):
            return UnifyFailure("occurs", s1, s2)
        return {s1.name: s2}, set(), s2
    if isinstance(s2, SVar):
        if s2.name in scheme_vars(s1):
            return UnifyFailure("occurs", s2, s1)
        return {s2.name: s1}, set(), s1
    if isinstance(s1, SAlg) or isinstance(s2, SAlg):
        if isinstance(s1, SAlg) and isinstance(s2, SAlg):
            if s1.name == s2.name:
                return {}, set(), s1
            return UnifyFailure("clash", s1, s2)
        if isinstance(s1, SBang) or isinstance(s2, SBang):
            pass        # handled by the bang cases below
        else:
            return UnifyFailure("clash", s1, s2)
    if isinstance(s1, SBang) and isinstance(s2, SBang):
        out = _unify(s1.body, s2.body, gen)
        if isinstance(out, UnifyFailure):
            return out
        mapping, cs, omega = out
        cs.add(ceq(s1.exp, s2.exp))
        return mapping, cs, SBang(_pick(s1.exp, s2.exp), omega)
    if isinstance(s1, SBang):
        out = _unify(s1.body, s2, gen)
        if isinstance(out, UnifyFailure):
            return out
        mapping, cs, omega = out
        cs.add(ceq0(s1.exp))
        return mapping, cs, omega
    if isinstance(s2, SBang):
        out = _unify(s1, s2.body, gen)
        if isinstance(out, UnifyFailure):
            return out
        mapping, cs, omega = out
        cs.add(ceq0(s2.exp))
        return mapping, cs, omega
    if isinstance(s1, SArrow) and isinstance(s2, SArrow):
        out = _unify(s1.left, s2.left, gen)
        if isinstance(out, UnifyFailure):
            return out
        m1, cs1, om_l = out
        emitted = set()
        r1 = _apply(m1, s1.right, emitted, gen)
        r2 = _apply(m1, s2.right, emitted, gen)
        out = _unify(r1, r2, gen)
        if isinstance(out, UnifyFailure):
            return out
        m2, cs2, om_r = out
        mapping = {k: _apply(m2, v, emitted, gen) for k, v in m1.items()}
        for k, v in m2.items():
            mapping.setdefault(k, v)
        om_l2 = _apply(m2, om_l, emitted, gen)
        return mapping, cs1 | cs2 | emitted, SArrow(om_l2, om_r)
    return UnifyFailure("clash", s1, s2)
