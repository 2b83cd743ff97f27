"""Types for the affine modal lambda calculi.

A type is a base variable, a linear arrow, a banged (modal) type, or an
algebra ground type.  A type is modal exactly when its outermost
constructor is a bang; everything else counts as linear.
"""

from __future__ import annotations

from dataclasses import dataclass


class EAType:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class TVar(EAType):
    name: str


@dataclass(frozen=True, slots=True)
class TArrow(EAType):
    left: EAType
    right: EAType


@dataclass(frozen=True, slots=True)
class TBang(EAType):
    inner: EAType


@dataclass(frozen=True, slots=True)
class TAlg(EAType):
    """Ground type of a free algebra, named by the algebra."""

    name: str


def is_modal(t: EAType) -> bool:
    return isinstance(t, TBang)


def bang(t: EAType, n: int = 1) -> EAType:
    for _ in range(n):
        t = TBang(t)
    return t


def strip_bangs(t: EAType) -> tuple[int, EAType]:
    """Split t into its leading bang count and linear core."""
    n = 0
    while isinstance(t, TBang):
        n += 1
        t = t.inner
    return n, t


class TypeParseError(ValueError):
    pass


def _tokenize_type(s: str) -> list[str]:
    toks = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
        elif c == "!":
            toks.append("!")
            i += 1
        elif c == "(":
            toks.append("(")
            i += 1
        elif c == ")":
            toks.append(")")
            i += 1
        elif c == "-":
            if i + 1 < n and s[i + 1] == "o":
                toks.append("-o")
                i += 2
            else:
                raise TypeParseError(f"stray '-' at position {i} in {s!r}")
        elif c.isalpha():
            j = i + 1
            while j < n and (s[j].isalnum() or s[j] == "'"):
                j += 1
            toks.append(s[i:j])
            i = j
        else:
            raise TypeParseError(f"unexpected character {c!r} in type {s!r}")
    return toks


def parse_type(s: str, algebra_names=None) -> EAType:
    """Parse a type.  Arrows associate right; bang binds tighter.

    Identifiers found in algebra_names parse as algebra ground types,
    anything else as a type variable.
    """
    toks = _tokenize_type(s)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(tok=None):
        nonlocal pos
        if pos >= len(toks):
            raise TypeParseError(f"unexpected end of type {s!r}")
        t = toks[pos]
        if tok is not None and t != tok:
            raise TypeParseError(f"expected {tok!r}, found {t!r} in {s!r}")
        pos += 1
        return t

    def atom() -> EAType:
        t = peek()
        if t == "!":
            take()
            return TBang(atom())
        if t == "(":
            take()
            inner = arrow()
            take(")")
            return inner
        if t is None or t in ("-o", ")"):
            raise TypeParseError(f"expected a type atom, found {t!r} in {s!r}")
        take()
        if algebra_names and t in algebra_names:
            return TAlg(t)
        return TVar(t)

    def arrow() -> EAType:
        left = atom()
        if peek() == "-o":
            take()
            return TArrow(left, arrow())
        return left

    result = arrow()
    if pos != len(toks):
        raise TypeParseError(f"trailing tokens {toks[pos:]} in type {s!r}")
    return result


def type_to_str(t: EAType) -> str:
    if isinstance(t, (TVar, TAlg)):
        return t.name
    if isinstance(t, TBang):
        inner = type_to_str(t.inner)
        if isinstance(t.inner, TArrow):
            inner = f"({inner})"
        return "!" + inner
    if isinstance(t, TArrow):
        left = type_to_str(t.left)
        if isinstance(t.left, TArrow):
            left = f"({left})"
        return f"{left} -o {type_to_str(t.right)}"
    raise TypeError(f"not a type: {t!r}")
