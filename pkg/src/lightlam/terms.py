"""Term syntax: plain lambda terms and the affine calculus with boxes.

Two ASTs live here.  Term is ordinary lambda calculus plus optional
algebra constants.  EATerm adds promotion !(M)[M1/x1,...,Mn/xn] and
contraction M[N/x,y], under the global invariant that every variable
has at most one use occurrence, binder names are pairwise distinct,
and no name is both bound and free.

Terms are identified up to renaming of bound variables; EATerms
additionally up to permutation of promotion binding lists.  alpha_eq
compares canonical forms that quotient both out.
"""

from __future__ import annotations

from dataclasses import dataclass


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Abs(Term):
    var: str
    body: Term


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Const(Term):
    """Algebra constant such as s_U, iter_U.  Meaning comes from a signature."""

    name: str


class EATerm:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class EVar(EATerm):
    name: str


@dataclass(frozen=True, slots=True)
class EAbs(EATerm):
    var: str
    body: EATerm


@dataclass(frozen=True, slots=True)
class EApp(EATerm):
    fn: EATerm
    arg: EATerm


@dataclass(frozen=True, slots=True)
class EPromote(EATerm):
    """!(body)[arg1/binder1, ..., argn/bindern]; binders scope over body."""

    body: EATerm
    bindings: tuple[tuple[EATerm, str], ...]


@dataclass(frozen=True, slots=True)
class EContract(EATerm):
    """body[arg/var1,var2]; var1 and var2 scope over body."""

    body: EATerm
    arg: EATerm
    var1: str
    var2: str


Occurrence = tuple[int, ...]


class TermParseError(ValueError):
    pass


class NameGen:
    """Deterministic fresh-name supply.  Names it hands out never repeat
    and never collide with the avoid set it was built over."""

    def __init__(self, avoid=()):
        self.avoid = set(avoid)
        self.counter = 0

    def fresh(self, base: str = "x") -> str:
        base = base.rstrip("0123456789'") or "x"
        while True:
            cand = f"{base}{self.counter}"
            self.counter += 1
            if cand not in self.avoid:
                self.avoid.add(cand)
                return cand


# ---------------------------------------------------------------- tokenizer

_PUNCT = {
    "\\": "LAMBDA",
    "λ": "LAMBDA",
    ".": "DOT",
    "(": "LP",
    ")": "RP",
    "[": "LB",
    "]": "RB",
    "/": "SLASH",
    ",": "COMMA",
    "!": "BANG",
}


def _tokenize(s: str):
    toks = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
            continue
        if c in _PUNCT:
            toks.append((_PUNCT[c], c, i))
            i += 1
            continue
        if c.isalpha():
            j = i + 1
            while j < n and (s[j].isalnum() or s[j] == "'"):
                j += 1
            name = s[i:j]
            if j < n and s[j] == "_":
                k = j + 1
                while k < n and s[k].isalnum():
                    k += 1
                if k == j + 1:
                    raise TermParseError(f"dangling '_' at {j} in {s!r}")
                toks.append(("CONST", s[i:k], i))
                i = k
            else:
                toks.append(("IDENT", name, i))
                i = j
            continue
        raise TermParseError(f"unexpected character {c!r} at {i} in {s!r}")
    return toks


def _check_varname(name, src, pos):
    if not name[0].islower():
        raise TermParseError(
            f"variable must start lowercase, got {name!r} at {pos} in {src!r}")


class _Parser:
    def __init__(self, s, toks):
        self.s = s
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def next(self, kind=None):
        if self.pos >= len(self.toks):
            raise TermParseError(f"unexpected end of input in {self.s!r}")
        k, v, p = self.toks[self.pos]
        if kind is not None and k != kind:
            raise TermParseError(f"expected {kind}, found {v!r} at {p} in {self.s!r}")
        self.pos += 1
        return k, v, p

    def done(self):
        return self.pos >= len(self.toks)

    def binders(self):
        names = []
        while self.peek() == "IDENT":
            _, v, p = self.next()
            _check_varname(v, self.s, p)
            names.append(v)
        if not names:
            raise TermParseError(f"lambda without binder in {self.s!r}")
        self.next("DOT")
        return names


def parse_term(s: str, signature=None) -> Term:
    """Parse a plain lambda term.  Constants (ident_Algebra tokens) are
    accepted only when a signature that knows them is supplied."""
    p = _Parser(s, _tokenize(s))

    def term():
        if p.peek() == "LAMBDA":
            p.next()
            names = p.binders()
            body = term()
            for nm in reversed(names):
                body = Abs(nm, body)
            return body
        return appchain()

    def appchain():
        t = atom()
        if t is None:
            _, v, q = p.toks[p.pos] if not p.done() else (None, "end of input", -1)
            raise TermParseError(f"expected a term, found {v!r} in {s!r}")
        while True:
            if p.peek() == "LAMBDA":
                p.next()
                names = p.binders()
                body = term()
                for nm in reversed(names):
                    body = Abs(nm, body)
                return App(t, body)
            nxt = atom()
            if nxt is None:
                return t
            t = App(t, nxt)

    def atom():
        k = p.peek()
        if k == "IDENT":
            _, v, q = p.next()
            _check_varname(v, s, q)
            return Var(v)
        if k == "CONST":
            _, v, q = p.next()
            if signature is None or not signature.is_constant(v):
                raise TermParseError(f"unknown constant {v!r} at {q} in {s!r}")
            return Const(v)
        if k == "LP":
            p.next()
            t = term()
            p.next("RP")
            return t
        return None

    result = term()
    if not p.done():
        _, v, q = p.toks[p.pos]
        raise TermParseError(f"trailing {v!r} at {q} in {s!r}")
    return result


def parse_eaterm(s: str) -> EATerm:
    p = _Parser(s, _tokenize(s))

    def term():
        if p.peek() == "LAMBDA":
            p.next()
            names = p.binders()
            body = term()
            for nm in reversed(names):
                body = EAbs(nm, body)
            return body
        return appchain()

    def appchain():
        t = postfixed()
        if t is None:
            raise TermParseError(f"expected a term in {s!r}")
        while True:
            if p.peek() == "LAMBDA":
                p.next()
                names = p.binders()
                body = term()
                for nm in reversed(names):
                    body = EAbs(nm, body)
                return EApp(t, body)
            nxt = postfixed()
            if nxt is None:
                return t
            t = EApp(t, nxt)

    def postfixed():
        t = base()
        if t is None:
            return None
        while p.peek() == "LB":
            t = contraction(t)
        return t

    def contraction(subject):
        p.next("LB")
        arg = term()
        p.next("SLASH")
        _, v1, q1 = p.next("IDENT")
        _check_varname(v1, s, q1)
        p.next("COMMA")
        _, v2, q2 = p.next("IDENT")
        _check_varname(v2, s, q2)
        p.next("RB")
        return EContract(subject, arg, v1, v2)

    def bindlist():
        p.next("LB")
        entries = []
        if p.peek() == "RB":
            p.next()
            return tuple(entries)
        while True:
            arg = term()
            p.next("SLASH")
            _, v, q = p.next("IDENT")
            _check_varname(v, s, q)
            entries.append((arg, v))
            k, tok, q = p.next()
            if k == "RB":
                return tuple(entries)
            if k != "COMMA":
                raise TermParseError(f"expected ',' or ']' at {q} in {s!r}")
            if p.peek() == "IDENT":
                # lookahead: a bare variable then ']' means someone wrote a
                # contraction bracket where a binding list must appear
                save = p.pos
                _, v2, _ = p.next()
                if p.peek() == "RB":
                    raise TermParseError(
                        f"the first bracket after !(..) is its binding list; "
                        f"write !(M)[..][N/x,y] to contract a promotion (in {s!r})")
                p.pos = save

    def base():
        k = p.peek()
        if k == "IDENT":
            _, v, q = p.next()
            _check_varname(v, s, q)
            return EVar(v)
        if k == "BANG":
            p.next()
            p.next("LP")
            body = term()
            p.next("RP")
            if p.peek() != "LB":
                raise TermParseError(
                    f"promotion !({eaterm_to_str(body)}) needs a binding list, "
                    f"possibly empty, in {s!r}")
            binds = bindlist()
            return EPromote(body, binds)
        if k == "LP":
            p.next()
            t = term()
            p.next("RP")
            return t
        return None

    result = term()
    if not p.done():
        _, v, q = p.toks[p.pos]
        raise TermParseError(f"trailing {v!r} at {q} in {s!r}")
    _check_affine(result, s)
    return result


def _check_affine(t: EATerm, src: str):
    uses: dict[str, int] = {}
    binders: list[str] = []

    def walk(m):
        if isinstance(m, EVar):
            uses[m.name] = uses.get(m.name, 0) + 1
        elif isinstance(m, EAbs):
            binders.append(m.var)
            walk(m.body)
        elif isinstance(m, EApp):
            walk(m.fn)
            walk(m.arg)
        elif isinstance(m, EPromote):
            for arg, v in m.bindings:
                binders.append(v)
                walk(arg)
            walk(m.body)
        elif isinstance(m, EContract):
            binders.extend((m.var1, m.var2))
            walk(m.body)
            walk(m.arg)

    walk(t)
    for name, k in uses.items():
        if k > 1:
            raise TermParseError(f"variable {name!r} occurs {k} times in {src!r}")
    if len(binders) != len(set(binders)):
        dup = sorted({b for b in binders if binders.count(b) > 1})
        raise TermParseError(f"binder {dup[0]!r} bound twice in {src!r}")
    for b in binders:
        if b in free_vars(t):
            raise TermParseError(f"{b!r} is both bound and free in {src!r}")


# ---------------------------------------------------------------- printing

def term_to_str(t: Term) -> str:
    if isinstance(t, Var) or isinstance(t, Const):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.var}.{term_to_str(t.body)}"
    if isinstance(t, App):
        f = term_to_str(t.fn)
        if isinstance(t.fn, Abs):
            f = f"({f})"
        a = term_to_str(t.arg)
        if isinstance(t.arg, (App, Abs)):
            a = f"({a})"
        return f"{f} {a}"
    raise TypeError(f"not a term: {t!r}")


def eaterm_to_str(t: EATerm) -> str:
    if isinstance(t, EVar):
        return t.name
    if isinstance(t, EAbs):
        return f"\\{t.var}.{eaterm_to_str(t.body)}"
    if isinstance(t, EApp):
        f = eaterm_to_str(t.fn)
        if isinstance(t.fn, EAbs):
            f = f"({f})"
        a = eaterm_to_str(t.arg)
        if isinstance(t.arg, (EApp, EAbs)):
            a = f"({a})"
        return f"{f} {a}"
    if isinstance(t, EPromote):
        binds = ", ".join(f"{eaterm_to_str(m)}/{x}" for m, x in t.bindings)
        return f"!({eaterm_to_str(t.body)})[{binds}]"
    if isinstance(t, EContract):
        b = eaterm_to_str(t.body)
        if isinstance(t.body, (EAbs, EApp)):
            b = f"({b})"
        return f"{b}[{eaterm_to_str(t.arg)}/{t.var1},{t.var2}]"
    raise TypeError(f"not an EA term: {t!r}")


# ---------------------------------------------------------------- measures

def length(t) -> int:
    """Structural size; promotion pays one per box plus one per binding."""
    if isinstance(t, (Var, Const, EVar)):
        return 1
    if isinstance(t, (Abs, EAbs)):
        return 1 + length(t.body)
    if isinstance(t, (App, EApp)):
        return 1 + length(t.fn) + length(t.arg)
    if isinstance(t, EPromote):
        return length(t.body) + 1 + sum(length(m) + 1 for m, _ in t.bindings)
    if isinstance(t, EContract):
        return length(t.body) + length(t.arg) + 1
    raise TypeError(f"not a term: {t!r}")


def free_vars(t) -> frozenset[str]:
    if isinstance(t, (Var, EVar)):
        return frozenset((t.name,))
    if isinstance(t, Const):
        return frozenset()
    if isinstance(t, (Abs, EAbs)):
        return free_vars(t.body) - {t.var}
    if isinstance(t, (App, EApp)):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, EPromote):
        fv = free_vars(t.body) - {x for _, x in t.bindings}
        for m, _ in t.bindings:
            fv |= free_vars(m)
        return fv
    if isinstance(t, EContract):
        return (free_vars(t.body) - {t.var1, t.var2}) | free_vars(t.arg)
    raise TypeError(f"not a term: {t!r}")


def all_names(t) -> set[str]:
    """Every name appearing in t, bound or free.  Fresh-name avoid sets."""
    out: set[str] = set()

    def walk(m):
        if isinstance(m, (Var, EVar)):
            out.add(m.name)
        elif isinstance(m, Const):
            pass
        elif isinstance(m, (Abs, EAbs)):
            out.add(m.var)
            walk(m.body)
        elif isinstance(m, (App, EApp)):
            walk(m.fn)
            walk(m.arg)
        elif isinstance(m, EPromote):
            for a, x in m.bindings:
                out.add(x)
                walk(a)
            walk(m.body)
        elif isinstance(m, EContract):
            out.add(m.var1)
            out.add(m.var2)
            walk(m.body)
            walk(m.arg)

    walk(t)
    return out


def is_affine(t: EATerm) -> bool:
    try:
        _check_affine(t, "<term>")
        return True
    except TermParseError:
        return False


# ------------------------------------------------------------- substitution

def substitute(m: Term, x: str, n: Term) -> Term:
    """m with n for free x, renaming binders of m away from free_vars(n)."""
    fvn = free_vars(n)
    avoid = set(all_names(m)) | set(all_names(n))

    def freshen(base):
        cand = base + "'"
        while cand in avoid:
            cand += "'"
        avoid.add(cand)
        return cand

    def go(t):
        if isinstance(t, Var):
            return n if t.name == x else t
        if isinstance(t, Const):
            return t
        if isinstance(t, App):
            return App(go(t.fn), go(t.arg))
        if isinstance(t, Abs):
            if t.var == x or x not in free_vars(t.body):
                return t
            if t.var in fvn:
                nv = freshen(t.var)
                return Abs(nv, go(substitute(t.body, t.var, Var(nv))))
            return Abs(t.var, go(t.body))
        raise TypeError(f"not a term: {t!r}")

    return go(m)


def ea_splice(m: EATerm, x: str, n: EATerm) -> EATerm:
    """Replace the (at most one) use of x in m by n.  Sound only under the
    affine naming invariant, which rules out capture."""

    def go(t):
        if isinstance(t, EVar):
            return n if t.name == x else t
        if isinstance(t, EAbs):
            return t if t.var == x else EAbs(t.var, go(t.body))
        if isinstance(t, EApp):
            return EApp(go(t.fn), go(t.arg))
        if isinstance(t, EPromote):
            body = t.body if any(v == x for _, v in t.bindings) else go(t.body)
            return EPromote(body, tuple((go(a), v) for a, v in t.bindings))
        if isinstance(t, EContract):
            body = t.body if x in (t.var1, t.var2) else go(t.body)
            return EContract(body, go(t.arg), t.var1, t.var2)
        raise TypeError(f"not an EA term: {t!r}")

    return go(m)


def rename_ea(t: EATerm, mapping: dict[str, str]) -> EATerm:
    """Rename variables (free and bound alike) through mapping."""
    if isinstance(t, EVar):
        return EVar(mapping.get(t.name, t.name))
    if isinstance(t, EAbs):
        return EAbs(mapping.get(t.var, t.var), rename_ea(t.body, mapping))
    if isinstance(t, EApp):
        return EApp(rename_ea(t.fn, mapping), rename_ea(t.arg, mapping))
    if isinstance(t, EPromote):
        return EPromote(
            rename_ea(t.body, mapping),
            tuple((rename_ea(a, mapping), mapping.get(v, v)) for a, v in t.bindings))
    if isinstance(t, EContract):
        return EContract(
            rename_ea(t.body, mapping), rename_ea(t.arg, mapping),
            mapping.get(t.var1, t.var1), mapping.get(t.var2, t.var2))
    raise TypeError(f"not an EA term: {t!r}")


# ---------------------------------------------------------------- values

def is_value(t: Term, signature=None) -> bool:
    """Variables and abstractions are values.  With a signature, constants
    applied to values are too, below the arity that would make them fire:
    constructors up to full arity, iterators and conditionals up to the
    constructor count of their algebra."""
    if isinstance(t, (Var, Abs)):
        return True
    head = t
    args = []
    while isinstance(head, App):
        args.append(head.arg)
        head = head.fn
    if isinstance(head, Const):
        if signature is None:
            return not args
        limit = signature.value_limit(head.name)
        if len(args) > limit:
            return False
        return all(is_value(a, signature) for a in args)
    return False


# ---------------------------------------------------------------- occurrences

def subterm_at(t, occ: Occurrence):
    for i in occ:
        t = _child(t, i)
    return t


def replace_at(t, occ: Occurrence, new):
    if not occ:
        return new
    i, rest = occ[0], occ[1:]
    if isinstance(t, (Abs, EAbs)):
        assert i == 0
        return type(t)(t.var, replace_at(t.body, rest, new))
    if isinstance(t, (App, EApp)):
        if i == 0:
            return type(t)(replace_at(t.fn, rest, new), t.arg)
        assert i == 1
        return type(t)(t.fn, replace_at(t.arg, rest, new))
    if isinstance(t, EPromote):
        if i == 0:
            return EPromote(replace_at(t.body, rest, new), t.bindings)
        binds = list(t.bindings)
        a, v = binds[i - 1]
        binds[i - 1] = (replace_at(a, rest, new), v)
        return EPromote(t.body, tuple(binds))
    if isinstance(t, EContract):
        if i == 0:
            return EContract(replace_at(t.body, rest, new), t.arg, t.var1, t.var2)
        assert i == 1
        return EContract(t.body, replace_at(t.arg, rest, new), t.var1, t.var2)
    raise IndexError(f"no child {i} in {t!r}")


def _child(t, i: int):
    if isinstance(t, (Abs, EAbs)) and i == 0:
        return t.body
    if isinstance(t, (App, EApp)):
        if i == 0:
            return t.fn
        if i == 1:
            return t.arg
    if isinstance(t, EPromote):
        if i == 0:
            return t.body
        if 1 <= i <= len(t.bindings):
            return t.bindings[i - 1][0]
    if isinstance(t, EContract):
        if i == 0:
            return t.body
        if i == 1:
            return t.arg
    raise IndexError(f"no child {i} in {t!r}")


# ---------------------------------------------------------------- alpha

def _canon_term(t: Term, env: dict[str, int], ctr: list[int]) -> str:
    if isinstance(t, Var):
        return f"b{env[t.name]}" if t.name in env else f"f:{t.name}"
    if isinstance(t, Const):
        return f"c:{t.name}"
    if isinstance(t, Abs):
        i = ctr[0]
        ctr[0] += 1
        inner = dict(env)
        inner[t.var] = i
        return f"(L{i} {_canon_term(t.body, inner, ctr)})"
    if isinstance(t, App):
        return f"({_canon_term(t.fn, env, ctr)} {_canon_term(t.arg, env, ctr)})"
    raise TypeError(f"not a term: {t!r}")


def _use_positions(t: EATerm, names: set[str], acc, pos: list[int]):
    # pre-order position of each use of a tracked name; binders shadow
    if isinstance(t, EVar):
        pos[0] += 1
        if t.name in names and t.name not in acc:
            acc[t.name] = pos[0]
    elif isinstance(t, EAbs):
        pos[0] += 1
        _use_positions(t.body, names - {t.var}, acc, pos)
    elif isinstance(t, EApp):
        pos[0] += 1
        _use_positions(t.fn, names, acc, pos)
        _use_positions(t.arg, names, acc, pos)
    elif isinstance(t, EPromote):
        pos[0] += 1
        bound = {v for _, v in t.bindings}
        _use_positions(t.body, names - bound, acc, pos)
        for a, _ in t.bindings:
            _use_positions(a, names, acc, pos)
    elif isinstance(t, EContract):
        pos[0] += 1
        _use_positions(t.body, names - {t.var1, t.var2}, acc, pos)
        _use_positions(t.arg, names, acc, pos)


def _canon_ea(t: EATerm, env: dict[str, int], ctr: list[int]) -> str:
    if isinstance(t, EVar):
        return f"b{env[t.name]}" if t.name in env else f"f:{t.name}"
    if isinstance(t, EAbs):
        i = ctr[0]
        ctr[0] += 1
        inner = dict(env)
        inner[t.var] = i
        return f"(L{i} {_canon_ea(t.body, inner, ctr)})"
    if isinstance(t, EApp):
        return f"({_canon_ea(t.fn, env, ctr)} {_canon_ea(t.arg, env, ctr)})"
    if isinstance(t, EContract):
        pos: dict[str, int] = {}
        _use_positions(t.body, {t.var1, t.var2}, pos, [0])
        first, second = t.var1, t.var2
        if pos.get(second, 1 << 60) < pos.get(first, 1 << 60):
            first, second = second, first
        i, j = ctr[0], ctr[0] + 1
        ctr[0] += 2
        inner = dict(env)
        inner[first], inner[second] = i, j
        return (f"(C{i},{j} {_canon_ea(t.body, inner, ctr)} "
                f"{_canon_ea(t.arg, env, ctr)})")
    if isinstance(t, EPromote):
        binders = {v for _, v in t.bindings}
        pos = {}
        _use_positions(t.body, binders, pos, [0])
        # arguments are canonicalized in the outer scope; binding order is
        # a multiset, so sort by use position in the body, absent last
        entries = []
        for a, v in t.bindings:
            astr = _canon_ea(a, env, ctr.copy())
            entries.append((pos.get(v, 1 << 60), astr, a, v))
        entries.sort(key=lambda e: (e[0], e[1]))
        inner = dict(env)
        idxs = []
        for _, _, a, v in entries:
            i = ctr[0]
            ctr[0] += 1
            inner[v] = i
            idxs.append(i)
        body = _canon_ea(t.body, inner, ctr)
        parts = ", ".join(
            f"{_canon_ea(a, env, ctr)}/{i}" for (_, _, a, v), i in zip(entries, idxs))
        return f"(P {body} [{parts}])"
    raise TypeError(f"not an EA term: {t!r}")


def canonical(t) -> str:
    if isinstance(t, Term):
        return _canon_term(t, {}, [0])
    if isinstance(t, EATerm):
        return _canon_ea(t, {}, [0])
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(a, b) -> bool:
    if isinstance(a, Term) != isinstance(b, Term):
        return False
    return canonical(a) == canonical(b)
