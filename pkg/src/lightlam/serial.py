"""Derivation files: a node per parenthesized group, judgement quoted.

    (E-o "x : A -o A |  |  |- x y : A"
      (A^L "x : A -o A |  |  |- x : A -o A")
      ...)

The judgement string is exactly what conclusion() prints, so files can
be assembled by copying checker output.  Three-slot judgements belong
to sized-derivation nodes, flat ones to sharing-calculus nodes.
"""

from __future__ import annotations

from .ea import NealDerivation
from .eatypes import parse_type
from .etas import ContextTriple, EtasDerivation
from .terms import parse_eaterm, parse_term


class SerialError(ValueError):
    pass


# ------------------------------------------------------------ writing

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write(d, out, indent):
    pad = " " * indent
    out.append(f"{pad}({d.rule} {_quote(d.conclusion())}")
    for c in d.children:
        out[-1] += "\n"
        _write(c, out, indent + 2)
    out[-1] += ")"


def etas_to_text(d: EtasDerivation) -> str:
    out: list[str] = []
    _write(d, out, 0)
    return "".join(out) + "\n"


def neal_to_text(d: NealDerivation) -> str:
    out: list[str] = []
    _write(d, out, 0)
    return "".join(out) + "\n"


# ------------------------------------------------------------ reading

def _tokens(s: str):
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == '"':
            j = i + 1
            buf = []
            while j < n and s[j] != '"':
                if s[j] == "\\" and j + 1 < n:
                    buf.append(s[j + 1])
                    j += 2
                else:
                    buf.append(s[j])
                    j += 1
            if j >= n:
                raise SerialError("unterminated string")
            yield '"' + "".join(buf)
            i = j + 1
        else:
            j = i
            while j < n and not s[j].isspace() and s[j] not in '()"':
                j += 1
            yield s[i:j]
            i = j


class _Reader:
    def __init__(self, text):
        self.toks = list(_tokens(text))
        self.pos = 0

    def next(self):
        if self.pos >= len(self.toks):
            raise SerialError("unexpected end of input")
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def node(self, build):
        if self.next() != "(":
            raise SerialError("expected (")
        rule = self.next()
        j = self.next()
        if not j.startswith('"'):
            raise SerialError("expected a quoted judgement")
        kids = []
        while True:
            if self.pos >= len(self.toks):
                raise SerialError("unexpected end of input")
            if self.toks[self.pos] == ")":
                self.pos += 1
                break
            kids.append(self.node(build))
        return build(rule, j[1:], tuple(kids))

    def done(self):
        if self.pos != len(self.toks):
            raise SerialError(f"trailing input at token {self.pos}")


def _split_judgement(j: str):
    cut = j.find("|-")
    if cut < 0:
        raise SerialError(f"no turnstile in {j!r}")
    left, right = j[:cut], j[cut + 2:]
    mid = right.find(" : ")
    if mid < 0:
        raise SerialError(f"no typed subject in {j!r}")
    return left, right[:mid].strip(), right[mid + 3:].strip()


def _entries(part: str, algebra_names) -> dict:
    out = {}
    part = part.strip()
    if not part:
        return out
    for item in part.split(","):
        name, _, ty = item.partition(":")
        name = name.strip()
        if not name or not ty.strip():
            raise SerialError(f"bad context entry {item!r}")
        if name in out:
            raise SerialError(f"duplicate context entry {name}")
        out[name] = parse_type(ty.strip(), algebra_names)
    return out


def etas_from_text(text: str, signature=None) -> EtasDerivation:
    names = {signature.name} if signature is not None else None

    def build(rule, j, kids):
        left, subj, ty = _split_judgement(j)
        slots = left.split("|")
        if len(slots) != 3:
            raise SerialError(f"expected three context slots in {j!r}")
        ctx = ContextTriple(*(_entries(s, names) for s in slots))
        return EtasDerivation(rule, ctx, parse_term(subj, signature),
                              parse_type(ty, names), kids)

    r = _Reader(text)
    d = r.node(build)
    r.done()
    return d


def neal_from_text(text: str, signature=None) -> NealDerivation:
    names = {signature.name} if signature is not None else None

    def build(rule, j, kids):
        left, subj, ty = _split_judgement(j)
        if "|" in left:
            raise SerialError("sharing judgements have a single context")
        return NealDerivation(rule, _entries(left, names),
                              parse_eaterm(subj), parse_type(ty, names), kids)

    r = _Reader(text)
    d = r.node(build)
    r.done()
    return d
