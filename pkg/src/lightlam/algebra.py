"""Free-algebra signatures and their constants.

A signature declares one algebra (a name plus ordered constructors with
arities) and induces a family of constants: one per constructor, an
iterator, and a conditional.  The signature object knows their types,
their symbolic schemes for inference, and the delta rules that fire them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .eatypes import EAType, TAlg, TArrow, TBang
from .schemes import SAlg, SArrow, SBang, SVar, exp_const
from .terms import Abs, App, Const, Term, Var, is_value


class AlgebraError(Exception):
    pass


def _spine(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def _apply(fn: Term, args) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


@dataclass(frozen=True)
class AlgebraSignature:
    """One algebra: its name and its ordered (constructor, arity) pairs."""

    name: str
    constructors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.constructors:
            raise AlgebraError(f"algebra {self.name} has no constructors")
        seen = set()
        for c, r in self.constructors:
            if c in seen:
                raise AlgebraError(f"duplicate constructor {c}")
            seen.add(c)
            if r < 0:
                raise AlgebraError(f"negative arity for {c}")

    # ------------------------------------------------------------ naming

    def ctor_constant(self, ctor: str) -> str:
        return f"{ctor}_{self.name}"

    @property
    def iter_constant(self) -> str:
        return f"iter_{self.name}"

    @property
    def cond_constant(self) -> str:
        return f"cond_{self.name}"

    def is_constant(self, name: str) -> bool:
        if name in (self.iter_constant, self.cond_constant):
            return True
        return any(name == self.ctor_constant(c) for c, _ in self.constructors)

    def _ctor_index(self, name: str):
        for i, (c, _) in enumerate(self.constructors):
            if name == self.ctor_constant(c):
                return i
        return None

    # ------------------------------------------------------------ types

    def value_limit(self, name: str) -> int:
        """Most arguments a constant may carry while remaining a value."""
        i = self._ctor_index(name)
        if i is not None:
            return self.constructors[i][1]
        if name in (self.iter_constant, self.cond_constant):
            return len(self.constructors)
        raise AlgebraError(f"unknown constant {name}")

    def constant_type(self, name: str, a: EAType | None = None) -> EAType:
        """The declared type of a constant; iterators and conditionals
        are a family indexed by the result type `a`."""
        alg = TAlg(self.name)
        i = self._ctor_index(name)
        if i is not None:
            t: EAType = alg
            for _ in range(self.constructors[i][1]):
                t = TArrow(alg, t)
            return t
        if name not in (self.iter_constant, self.cond_constant):
            raise AlgebraError(f"unknown constant {name}")
        if a is None:
            raise AlgebraError(f"{name} needs a result type")
        # iterator branches consume folded results, conditional branches
        # receive the constructor's raw subterms
        wrap = name == self.iter_constant
        t = TBang(a) if wrap else a
        for _, r in reversed(self.constructors):
            step: EAType = a
            for _ in range(r):
                step = TArrow(a if wrap else alg, step)
            t = TArrow(TBang(step) if wrap else step, t)
        return TArrow(alg, t)

    def admits_type(self, name: str, t: EAType) -> bool:
        """Exact membership in the constant's type family."""
        i = self._ctor_index(name)
        if i is not None:
            return t == self.constant_type(name)
        if name not in (self.iter_constant, self.cond_constant):
            return False
        # recover the result type from the tail of the arrow chain,
        # then demand the rebuilt schema matches verbatim
        tail = t
        for _ in range(len(self.constructors) + 1):
            if not isinstance(tail, TArrow):
                return False
            tail = tail.right
        if name == self.iter_constant:
            if not isinstance(tail, TBang):
                return False
            a = tail.inner
        else:
            a = tail
        return t == self.constant_type(name, a)

    def constant_scheme(self, name: str, gen):
        """Symbolic shape of the constant's type for inference: the
        schema at a fresh scheme variable, fixed bangs as constant 1."""
        alg = SAlg(self.name)
        i = self._ctor_index(name)
        if i is not None:
            s = alg
            for _ in range(self.constructors[i][1]):
                s = SArrow(alg, s)
            return s
        if name not in (self.iter_constant, self.cond_constant):
            raise AlgebraError(f"unknown constant {name}")
        hole = SVar(gen.var())
        wrap = name == self.iter_constant
        s = SBang(exp_const(1), hole) if wrap else hole
        for _, r in reversed(self.constructors):
            step = hole
            for _ in range(r):
                step = SArrow(hole if wrap else alg, step)
            if wrap:
                step = SBang(exp_const(1), step)
            s = SArrow(step, s)
        return SArrow(alg, s)

    # ------------------------------------------------------------ values

    def is_algebra_value(self, t: Term) -> bool:
        """Closed term built from this algebra's constructors, each
        applied to exactly its arity."""
        head, args = _spine(t)
        if not isinstance(head, Const):
            return False
        i = self._ctor_index(head.name)
        if i is None or len(args) != self.constructors[i][1]:
            return False
        return all(self.is_algebra_value(a) for a in args)

    def fold_term(self, t: Term, ms) -> Term:
        """Replace constructor i throughout the value t by ms[i]."""
        ms = list(ms)
        if len(ms) != len(self.constructors):
            raise AlgebraError(
                f"fold over {self.name} takes {len(self.constructors)} terms")
        if not self.is_algebra_value(t):
            raise AlgebraError("fold subject is not an algebra value")

        def go(v: Term) -> Term:
            head, args = _spine(v)
            i = self._ctor_index(head.name)
            return _apply(ms[i], (go(a) for a in args))

        return go(t)

    # ------------------------------------------------------------ delta

    def delta_step(self, m: Term) -> Term | None:
        """Fire an iterator or conditional redex at the root, if any."""
        head, args = _spine(m)
        if not isinstance(head, Const):
            return None
        k = len(self.constructors)
        if len(args) != k + 1:
            return None
        scrut, branches = args[0], args[1:]
        if not self.is_algebra_value(scrut):
            return None
        if not all(is_value(b, self) for b in branches):
            return None
        if head.name == self.iter_constant:
            return self.fold_term(scrut, branches)
        if head.name == self.cond_constant:
            chead, cargs = _spine(scrut)
            i = self._ctor_index(chead.name)
            return _apply(branches[i], cargs)
        return None


_DECL = re.compile(r"^\s*algebra\s+(\w+)\s*\{(.*)\}\s*$", re.S)


def load_signature(text: str) -> AlgebraSignature:
    """Parse a declaration like `algebra U { s/1, z/0 }`."""
    text = "\n".join(ln.split("#", 1)[0] for ln in text.splitlines())
    m = _DECL.match(text)
    if not m:
        raise AlgebraError("expected: algebra <name> { c/arity, ... }")
    name, body = m.group(1), m.group(2).strip()
    ctors = []
    if body:
        for part in body.split(","):
            part = part.strip()
            cm = re.fullmatch(r"(\w+)\s*/\s*(\d+)", part)
            if not cm:
                raise AlgebraError(f"malformed constructor {part!r}")
            ctors.append((cm.group(1), int(cm.group(2))))
    return AlgebraSignature(name, tuple(ctors))


# ------------------------------------------------------- unary integers

def unary_signature() -> AlgebraSignature:
    return load_signature("algebra U { s/1, z/0 }")


def numeral(n: int) -> Term:
    """The unary numeral: n successors over zero."""
    t: Term = Const("z_U")
    for _ in range(n):
        t = App(Const("s_U"), t)
    return t


def numeral_value(t: Term) -> int | None:
    """Read a unary numeral back, or None if t is not one."""
    n = 0
    while isinstance(t, App) and t.fn == Const("s_U"):
        n += 1
        t = t.arg
    return n if t == Const("z_U") else None


def exp_term() -> Term:
    """Doubles iterated: at argument n, evaluates to a function that
    sends p to 2^n + p."""
    two = Abs("y", Abs("w", App(Var("y"), App(Var("y"), Var("w")))))
    base = Abs("y", App(Const("s_U"), Var("y")))
    return Abs("x", _apply(Const("iter_U"), [Var("x"), two, base]))


def coerc_term(n: int) -> Term:
    """Identity on numerals whose result type carries n extra bangs."""
    if n < 0:
        raise AlgebraError("negative coercion depth")
    if n == 0:
        return Abs("x", Var("x"))
    if n == 1:
        return Abs("x", _apply(Const("iter_U"),
                               [Var("x"), Const("s_U"), Const("z_U")]))
    prev = coerc_term(n - 1)
    return Abs("x", App(Abs("y", App(prev, Var("y"))),
                        App(coerc_term(1), Var("x"))))


def tower_term(n: int) -> Term:
    """Iterated exponential: sends m to a tower of n twos topped by m."""
    if n < 0:
        raise AlgebraError("negative tower height")
    if n == 0:
        return Abs("x", Var("x"))
    inner = App(Abs("w", App(Var("w"), numeral(0))),
                App(exp_term(), Var("x")))
    return Abs("x", App(Abs("y", App(tower_term(n - 1), Var("y"))), inner))
