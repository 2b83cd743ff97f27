"""Type schemes with symbolic bang exponents.

A scheme is a simple type whose bang prefixes carry symbolic exponents:
sums of literal names plus an optional natural constant.  Exponents are
multisets, so a+a is legal and differs from a.  Nested bangs never
appear; merging two exponents either builds their sum in place or, in
the public substitution API, emits a fresh literal r constrained by
r=p+q.  A type scheme pairs a scheme with a constraint set over its
exponents (equalities between exponents and strict positivity).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .eatypes import EAType, TAlg, TArrow, TBang, TVar, bang


# ------------------------------------------------------------- exponents

class Exponential:
    """Sum of exponent literals and a natural constant.

    Built as a binary tree so that wrapping during inference is O(1);
    flattening to a multiset is cached per node.
    """

    __slots__ = ("kind", "name", "value", "left", "right", "_flat")

    def __init__(self, kind, name="", value=0, left=None, right=None):
        self.kind = kind
        self.name = name
        self.value = value
        self.left = left
        self.right = right
        self._flat = None

    def flatten(self) -> tuple[Counter, int]:
        if self._flat is None:
            if self.kind == "lit":
                self._flat = (Counter({self.name: 1}), 0)
            elif self.kind == "const":
                self._flat = (Counter(), self.value)
            else:
                lc, lk = self.left.flatten()
                rc, rk = self.right.flatten()
                self._flat = (lc + rc, lk + rk)
        return self._flat

    def literals(self) -> set[str]:
        return set(self.flatten()[0])

    def key(self):
        c, k = self.flatten()
        return tuple(sorted(c.items())), k

    def __eq__(self, other):
        return isinstance(other, Exponential) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        c, k = self.flatten()
        parts = []
        for name in sorted(c):
            parts.extend([name] * c[name])
        if k or not parts:
            parts.append(str(k))
        return "+".join(parts)

    def __repr__(self):
        return f"Exponential({self})"


def exp_lit(name: str) -> Exponential:
    return Exponential("lit", name=name)


def exp_const(n: int) -> Exponential:
    if n < 0:
        raise ValueError("exponent constants are naturals")
    return Exponential("const", value=n)


def exp_sum(a: Exponential, b: Exponential) -> Exponential:
    return Exponential("sum", left=a, right=b)


def exp_value(e: Exponential, assign: dict[str, int]) -> int:
    c, k = e.flatten()
    total = k
    for name, mult in c.items():
        if name not in assign:
            raise KeyError(f"exponent literal {name} has no value")
        total += mult * assign[name]
    return total


# ------------------------------------------------------------ constraints

@dataclass(frozen=True)
class Constraint:
    """Either an equality between two exponents or strict positivity."""
    kind: str                    # "eq" | "gt0"
    lhs: Exponential
    rhs: Exponential | None = None

    def __post_init__(self):
        if self.kind not in ("eq", "gt0"):
            raise ValueError(f"bad constraint kind {self.kind!r}")

    def _key(self):
        if self.kind == "eq":
            return ("eq", frozenset((self.lhs.key(), self.rhs.key())))
        return ("gt0", self.lhs.key())

    def __eq__(self, other):
        return isinstance(other, Constraint) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __str__(self):
        if self.kind == "eq":
            return f"{self.lhs}={self.rhs}"
        return f"{self.lhs}>0"

    def holds(self, assign: dict[str, int]) -> bool:
        if self.kind == "eq":
            return exp_value(self.lhs, assign) == exp_value(self.rhs, assign)
        return exp_value(self.lhs, assign) > 0

    def literals(self) -> set[str]:
        out = self.lhs.literals()
        if self.rhs is not None:
            out |= self.rhs.literals()
        return out


def ceq(a: Exponential, b: Exponential) -> Constraint:
    return Constraint("eq", a, b)


def ceq0(a: Exponential) -> Constraint:
    return Constraint("eq", a, exp_const(0))


def cgt0(a: Exponential) -> Constraint:
    return Constraint("gt0", a)


ModalitySet = frozenset


def mset(*cs) -> frozenset:
    return frozenset(cs)


def constraints_to_str(cs) -> str:
    return "{" + ", ".join(sorted(str(c) for c in cs)) + "}"


def satisfies(cs, assign: dict[str, int]) -> bool:
    return all(c.holds(assign) for c in cs)


# ---------------------------------------------------------------- schemes

class Scheme:
    __slots__ = ()


@dataclass(frozen=True)
class SVar(Scheme):
    name: str


@dataclass(frozen=True)
class SAlg(Scheme):
    name: str


@dataclass(frozen=True)
class SArrow(Scheme):
    left: Scheme
    right: Scheme


@dataclass(frozen=True)
class SBang(Scheme):
    exp: Exponential
    body: Scheme

    def __post_init__(self):
        if isinstance(self.body, SBang):
            raise ValueError("nested symbolic bangs are not a scheme")


def banged(exp: Exponential, body: Scheme) -> Scheme:
    """Prefix an exponent, merging into an existing bang as a sum."""
    if isinstance(body, SBang):
        return SBang(exp_sum(exp, body.exp), body.body)
    return SBang(exp, body)


def scheme_vars(s: Scheme) -> set[str]:
    if isinstance(s, SVar):
        return {s.name}
    if isinstance(s, SArrow):
        return scheme_vars(s.left) | scheme_vars(s.right)
    if isinstance(s, SBang):
        return scheme_vars(s.body)
    return set()


def scheme_literals(s: Scheme) -> set[str]:
    if isinstance(s, SArrow):
        return scheme_literals(s.left) | scheme_literals(s.right)
    if isinstance(s, SBang):
        return s.exp.literals() | scheme_literals(s.body)
    return set()


def scheme_to_str(s: Scheme) -> str:
    if isinstance(s, SVar):
        return s.name
    if isinstance(s, SAlg):
        return s.name
    if isinstance(s, SArrow):
        lhs = scheme_to_str(s.left)
        if isinstance(s.left, SArrow):
            lhs = f"({lhs})"
        return f"{lhs} -o {scheme_to_str(s.right)}"
    if isinstance(s, SBang):
        body = scheme_to_str(s.body)
        if isinstance(s.body, SArrow):
            body = f"({body})"
        return f"!^{{{s.exp}}} {body}"
    raise TypeError(f"not a scheme: {s!r}")


@dataclass(frozen=True)
class TypeScheme:
    scheme: Scheme
    constraints: frozenset = field(default_factory=frozenset)

    def __str__(self):
        return f"{scheme_to_str(self.scheme)} |> {constraints_to_str(self.constraints)}"

    def literals(self) -> set[str]:
        out = scheme_literals(self.scheme)
        for c in self.constraints:
            out |= c.literals()
        return out


# ---------------------------------------------------------------- skeleton

def skeleton(z: TypeScheme | Scheme) -> EAType:
    """The simple type left after erasing every bang prefix."""
    s = z.scheme if isinstance(z, TypeScheme) else z
    if isinstance(s, SVar):
        return TVar(s.name)
    if isinstance(s, SAlg):
        return TAlg(s.name)
    if isinstance(s, SArrow):
        return TArrow(skeleton(s.left), skeleton(s.right))
    if isinstance(s, SBang):
        return skeleton(s.body)
    raise TypeError(f"not a scheme: {s!r}")


# -------------------------------------------------- ground instantiation

@dataclass(frozen=True)
class SchemeSubstitution:
    """Ground instantiation: scheme variables to types, literals to naturals."""
    types: dict[str, EAType] = field(default_factory=dict)
    exps: dict[str, int] = field(default_factory=dict)

    def exp_of(self, e: Exponential) -> int:
        return exp_value(e, self.exps)


def apply_scheme_subst(S: SchemeSubstitution, z: TypeScheme) -> EAType | None:
    """Ground a type scheme; None when its constraints are unsatisfied."""
    if not satisfies(z.constraints, S.exps):
        return None
    return _ground(S, z.scheme)


def _ground(S, s):
    if isinstance(s, SVar):
        if s.name not in S.types:
            raise KeyError(f"scheme variable {s.name} has no instance")
        return S.types[s.name]
    if isinstance(s, SAlg):
        return TAlg(s.name)
    if isinstance(s, SArrow):
        return TArrow(_ground(S, s.left), _ground(S, s.right))
    if isinstance(s, SBang):
        return bang(_ground(S, s.body), S.exp_of(s.exp))
    raise TypeError(f"not a scheme: {s!r}")


# ------------------------------------------------- symbolic substitution

class NameSource:
    """Deterministic fresh literals a0,a1,... and scheme vars 'v0,'v1,..."""

    def __init__(self, avoid=()):  # avoid: names never to emit
        self.avoid = set(avoid)
        self.nlit = 0
        self.nvar = 0

    def lit(self) -> str:
        while True:
            name = f"a{self.nlit}"
            self.nlit += 1
            if name not in self.avoid:
                return name

    def var(self) -> str:
        while True:
            name = f"'v{self.nvar}"
            self.nvar += 1
            if name not in self.avoid:
                return name


@dataclass(frozen=True)
class Substitution:
    """Scheme-variable replacement together with emitted constraints."""
    mapping: dict[str, Scheme] = field(default_factory=dict)
    constraints: frozenset = field(default_factory=frozenset)

    def literals(self) -> set[str]:
        out = set()
        for s in self.mapping.values():
            out |= scheme_literals(s)
        for c in self.constraints:
            out |= c.literals()
        return out

    def __str__(self):
        m = ", ".join(f"{k} := {scheme_to_str(v)}"
                      for k, v in sorted(self.mapping.items()))
        return f"[{m}] {constraints_to_str(self.constraints)}"


def identity_subst() -> Substitution:
    return Substitution({}, frozenset())


def apply_subst(t: Substitution, z: TypeScheme,
                gen: NameSource | None = None) -> TypeScheme:
    """Apply a substitution to a type scheme.

    Variables pick up the substitution's constraint set; replacing a
    variable under a bang by another banged scheme emits a fresh
    literal r with r=p+q instead of nesting.
    """
    if gen is None:
        gen = NameSource(t.literals() | z.literals())
    emitted = set()
    s = _apply(t.mapping, z.scheme, emitted, gen)
    return TypeScheme(s, z.constraints | t.constraints | frozenset(emitted))


def _apply(mapping, s, emitted, gen):
    if isinstance(s, SVar):
        return mapping.get(s.name, s)
    if isinstance(s, SAlg):
        return s
    if isinstance(s, SArrow):
        return SArrow(_apply(mapping, s.left, emitted, gen),
                      _apply(mapping, s.right, emitted, gen))
    if isinstance(s, SBang):
        body = _apply(mapping, s.body, emitted, gen)
        if isinstance(body, SBang):
            r = exp_lit(gen.lit())
            emitted.add(ceq(r, exp_sum(s.exp, body.exp)))
            return SBang(r, body.body)
        return SBang(s.exp, body)
    raise TypeError(f"not a scheme: {s!r}")


def compose(t1: Substitution, t2: Substitution,
            gen: NameSource | None = None) -> Substitution:
    """Substitution running t1 first, then t2."""
    if gen is None:
        gen = NameSource(t1.literals() | t2.literals())
    emitted = set()
    mapping = {}
    for k, v in t1.mapping.items():
        mapping[k] = _apply(t2.mapping, v, emitted, gen)
    for k, v in t2.mapping.items():
        mapping.setdefault(k, v)
    return Substitution(mapping,
                        t1.constraints | t2.constraints | frozenset(emitted))


def eq_e(z1: TypeScheme, z2: TypeScheme) -> bool:
    """Equality of underlying skeletons; exponents and constraints ignored."""
    return skeleton(z1) == skeleton(z2)
