import pytest
from hypothesis import given, strategies as st

from lightlam.terms import (
    Abs, App, Const, EAbs, EApp, EContract, EPromote, EVar, NameGen,
    TermParseError, Var, all_names, alpha_eq, canonical, eaterm_to_str,
    free_vars, is_affine, is_value, length, parse_eaterm, parse_term,
    replace_at, subterm_at, substitute, term_to_str,
)
from lightlam.algebra import numeral, unary_signature


def test_parse_basics():
    assert parse_term("x") == Var("x")
    assert parse_term(r"\x.x") == Abs("x", Var("x"))
    # application associates left, abstraction body extends right
    assert parse_term("x y z") == App(App(Var("x"), Var("y")), Var("z"))
    assert parse_term(r"\x.x y") == Abs("x", App(Var("x"), Var("y")))
    assert parse_term(r"\x.\y.x") == Abs("x", Abs("y", Var("x")))
    assert parse_term("x (y z)") == App(Var("x"), App(Var("y"), Var("z")))


def test_parse_names():
    assert parse_term("x'") == Var("x'")
    assert parse_term("xY2") == Var("xY2")
    with pytest.raises(TermParseError):
        parse_term("X")
    with pytest.raises(TermParseError):
        parse_term(r"\x.")
    with pytest.raises(TermParseError):
        parse_term("(x")


def test_parse_constants_need_signature():
    sig = unary_signature()
    assert parse_term("s_U z_U", sig) == App(Const("s_U"), Const("z_U"))
    with pytest.raises(TermParseError):
        parse_term("s_U z_U")


ROUND_TRIP = [
    "x",
    r"\x.x",
    r"\x.\y.x (x y)",
    r"(\x.x) (y z)",
    r"\f.(\x.f (x x)) (\x.f (x x))",
    "x y' z2",
]


@pytest.mark.parametrize("src", ROUND_TRIP)
def test_term_round_trip(src):
    t = parse_term(src)
    assert parse_term(term_to_str(t)) == t


_names = st.sampled_from(["x", "y", "z", "w", "f"])


def _terms(depth):
    if depth == 0:
        return st.builds(Var, _names)
    sub = _terms(depth - 1)
    return st.one_of(
        st.builds(Var, _names),
        st.builds(Abs, _names, sub),
        st.builds(App, sub, sub),
    )


@given(_terms(4))
def test_printer_parser_inverse(t):
    assert parse_term(term_to_str(t)) == t


EA_ROUND_TRIP = [
    "x",
    r"\x.x y",
    "!(x)[]",
    "!(x)[y/x]",
    "(x y)[z/x,y]",
    r"!(x (y q))[(\w.w)/x, !(v)[u/v]/y, (a b)/q]",
    r"(!(x)[y/x])[z/a,b]",
]


@pytest.mark.parametrize("src", EA_ROUND_TRIP)
def test_eaterm_round_trip(src):
    t = parse_eaterm(src)
    assert parse_eaterm(eaterm_to_str(t)) == t
    assert is_affine(t)


def test_eaterm_parser_rejects_duplicates():
    with pytest.raises(TermParseError):
        parse_eaterm("x x")
    with pytest.raises(TermParseError):
        parse_eaterm(r"\x.x x")
    # a contraction binder may not also occur free outside it
    with pytest.raises(TermParseError):
        parse_eaterm("(x)[y/x1,x2] x2")


def test_length():
    assert length(parse_term("x")) == 1
    assert length(parse_term(r"\x.x y")) == 4
    assert length(parse_term(r"\x.\y.x (x y)")) == 7
    # promotion counts its body, itself, and one per binding slot
    assert length(parse_eaterm("!(x)[]")) == 2
    assert length(parse_eaterm("!(x)[y/x]")) == 4
    assert length(parse_eaterm("(x y)[z/x,y]")) == 5
    assert length(EContract(EVar("a"), EVar("b"), "x", "y")) == 3


def test_free_vars():
    assert free_vars(parse_term(r"\x.x y")) == frozenset({"y"})
    assert free_vars(parse_term("x x")) == frozenset({"x"})
    assert free_vars(parse_eaterm("!(x)[y/x]")) == frozenset({"y"})
    assert free_vars(parse_eaterm("(x y)[z/x,y]")) == frozenset({"z"})
    t = parse_eaterm(r"!(x (y q))[(\w.w)/x, v/y, (a b)/q]")
    assert free_vars(t) == frozenset({"v", "a", "b"})
    assert {"x", "y", "q", "w"} <= all_names(t)


def test_alpha_eq():
    assert alpha_eq(parse_term(r"\x.x"), parse_term(r"\y.y"))
    assert not alpha_eq(parse_term(r"\x.\y.x"), parse_term(r"\x.\y.y"))
    assert alpha_eq(parse_eaterm("!(a)[u/a]"), parse_eaterm("!(b)[u/b]"))
    assert alpha_eq(parse_eaterm("(x y)[z/x,y]"), parse_eaterm("(p q)[z/p,q]"))
    # the two copies of a contraction are interchangeable
    assert alpha_eq(parse_eaterm("(x y)[z/x,y]"), parse_eaterm("(y x)[z/x,y]"))
    assert not alpha_eq(parse_eaterm("!(x)[y/x]"), parse_eaterm("!(x)[]"))
    assert canonical(parse_term(r"\x.x y")) == canonical(parse_term(r"\z.z y"))


def test_substitute_avoids_capture():
    t = substitute(Abs("y", App(Var("x"), Var("y"))), "x", Var("y"))
    assert alpha_eq(t, parse_term(r"\w.y w"))
    assert t.var != "y"
    # no-op when the variable is shadowed
    t = substitute(Abs("x", Var("x")), "x", Var("z"))
    assert t == Abs("x", Var("x"))


def test_is_value():
    sig = unary_signature()
    assert is_value(parse_term("x"))
    assert is_value(parse_term(r"\x.x y"))
    assert not is_value(parse_term("x y"))
    assert is_value(Const("s_U"), sig)
    assert is_value(numeral(3), sig)
    assert is_value(parse_term("iter_U (s_U z_U)", sig), sig)
    # a saturated iterator application is a pending redex, not a value
    assert not is_value(parse_term("iter_U z_U x y", sig), sig)


def test_occurrences():
    t = parse_term(r"(\x.x) (y z)")
    assert subterm_at(t, ()) == t
    assert subterm_at(t, (0,)) == Abs("x", Var("x"))
    assert subterm_at(t, (1, 0)) == Var("y")
    assert replace_at(t, (1,), Var("w")) == App(Abs("x", Var("x")), Var("w"))
    assert replace_at(t, (), Var("w")) == Var("w")
    with pytest.raises(Exception):
        subterm_at(t, (2,))


def test_namegen():
    g = NameGen({"x", "x0"})
    a, b = g.fresh("x"), g.fresh("x")
    assert a != b and a not in {"x", "x0"} and b not in {"x", "x0"}
