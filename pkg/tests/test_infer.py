import random

import pytest

from lightlam.eatypes import parse_type
from lightlam.etas import check_etas_derivation, is_typing
from lightlam.infer import InstantiateError, instantiate, pt, typable
from lightlam.linsolve import solve
from lightlam.schemes import (SchemeSubstitution, satisfies, scheme_to_str,
                              scheme_vars, skeleton)
from lightlam.terms import alpha_eq, parse_term

from genlib import reach, reach_free, typable_pool


def test_pt_variable():
    p = pt(parse_term("x"))
    assert scheme_to_str(p.result.scheme) == "!^{a0} 'v0"
    assert set(p.sigma) == {"x"}
    assert p.sigma["x"] == p.result
    assert p.constraints == frozenset()


def test_pt_identity():
    p = pt(parse_term(r"\x.x"))
    assert scheme_to_str(p.result.scheme) == "!^{a1} (!^{a0} 'v0 -o !^{a0} 'v0)"
    assert not p.sigma and not p.constraints


def test_pt_application_bangs_context_and_result():
    p = pt(parse_term("x y"))
    assert scheme_to_str(p.result.scheme) == "!^{a2+a3} 'v2"
    assert scheme_to_str(p.sigma["x"].scheme) \
        == "!^{a0+a3} (!^{a1} 'v1 -o !^{a2} 'v2)"
    assert scheme_to_str(p.sigma["y"].scheme) == "!^{a1+a3} 'v1"
    assert sorted(str(c) for c in p.constraints) == ["a0=0"]


def test_pt_twice_frozen_shape():
    """The doubling combinator's principal scheme, pinned exactly."""
    p = pt(parse_term(r"\x.\y.x (x y)"))
    assert scheme_to_str(p.result.scheme) == (
        "!^{a9} (!^{a8} (!^{a2} 'v2 -o !^{a5} 'v2) -o "
        "!^{a7} (!^{a2+a4+a6} 'v2 -o !^{a5+a6} 'v2))")
    assert sorted(str(c) for c in p.constraints) == [
        "a0+a6+a7=a8", "a0=0", "a0=a1+a4", "a1=0",
        "a3+a4=a2", "a5=a3", "a8>0"]
    assert not p.sigma
    sol = solve(p.constraints)
    assert sol is not None and satisfies(p.constraints, sol)


def test_pt_self_application_fails_occurs():
    assert pt(parse_term(r"\x.x x")) is None
    assert pt(parse_term(r"(\x.x x) (\y.y)")) is None
    assert not typable(parse_term(r"\x.x x"))
    assert typable(parse_term(r"\x.\y.x (x y)"))


def test_pt_constants():
    from lightlam.algebra import unary_signature
    sig = unary_signature()
    p = pt(parse_term("s_U", sig), sig)
    assert scheme_to_str(p.result.scheme) == "!^{a0} (U -o U)"
    p = pt(parse_term("iter_U", sig), sig)
    assert scheme_to_str(p.result.scheme) \
        == "!^{a0} (U -o !^{1} ('v0 -o 'v0) -o !^{1} 'v0 -o !^{1} 'v0)"
    # constants only parse under their signature
    assert pt(parse_term(r"\x.s_U (s_U x)", sig), sig) is not None


def test_reach_banged_identity_type():
    two = parse_term(r"\x.\y.x (x y)")
    d = reach(pt(two), parse_type("!(a -o a) -o !(a -o a)"))
    assert d is not None and is_typing(d)
    assert d.type == parse_type("!(a -o a) -o !(a -o a)")
    check_etas_derivation(d)


def test_instantiate_requires_satisfying_assignment():
    p = pt(parse_term(r"\x.\y.x (x y)"))
    vals = {f"a{i}": 0 for i in range(10)}  # violates a8 > 0
    S = SchemeSubstitution(types={"'v2": parse_type("b")}, exps=vals)
    with pytest.raises(InstantiateError):
        instantiate(p, S)


def test_instantiate_placement_defaults():
    p = pt(parse_term("x"))
    S = SchemeSubstitution(types={"'v0": parse_type("b")}, exps={"a0": 0})
    ctx, _, ty, d = instantiate(p, S)
    assert ctx.gamma == {"x": parse_type("b")} and ty == parse_type("b")
    assert is_typing(d)

    S2 = SchemeSubstitution(types={"'v0": parse_type("b")}, exps={"a0": 2})
    ctx, _, ty, d = instantiate(p, S2)
    assert ctx.delta == {"x": parse_type("!!b")}
    assert is_typing(d)


def test_instantiate_placement_explicit():
    p = pt(parse_term("x"))
    S = SchemeSubstitution(types={"'v0": parse_type("b")}, exps={"a0": 0})
    ctx, _, _, d = instantiate(p, S, placement="explicit",
                               requested={"x": "theta"})
    assert ctx.theta == {"x": parse_type("b")}
    assert not is_typing(d)  # parked hypotheses block the typing reading
    with pytest.raises(InstantiateError):
        instantiate(p, S, placement="explicit", requested={"x": "delta"})

    S2 = SchemeSubstitution(types={"'v0": parse_type("b")}, exps={"a0": 1})
    with pytest.raises(InstantiateError):
        instantiate(p, S2, placement="explicit", requested={"x": "gamma"})


def test_instantiate_contracted_variable():
    """Two linear uses of one hypothesis can only be parked; a banged
    assignment frees it into the modal slot."""
    p = pt(parse_term(r"\y.x (x y)"))
    sol = solve(p.constraints)
    vs = set()
    for z in list(p.sigma.values()) + [p.result]:
        vs |= scheme_vars(z.scheme)
    types = {v: parse_type("b") for v in vs}
    ctx, _, _, d = instantiate(p, SchemeSubstitution(types, sol))
    check_etas_derivation(d)
    assert set(ctx.theta) == {"x"} and not is_typing(d)
    with pytest.raises(InstantiateError):
        instantiate(p, SchemeSubstitution(types, sol),
                    placement="explicit", requested={"x": "gamma"})
    d2 = reach_free(parse_term(r"\y.x (x y)"),
                    {"x": parse_type("!(b -o b)")})
    assert d2 is not None and is_typing(d2)
    assert d2.ctx.delta == {"x": parse_type("!(b -o b)")}
    assert d2.type == parse_type("!b -o !b")


def test_instantiated_derivations_check_and_type():
    rng = random.Random(20)
    pool = typable_pool(rng, 40, 18)
    assert len(pool) == 40
    for term, d in pool:
        check_etas_derivation(d)
        assert is_typing(d)
        # bound names are uniquified on the way in
        assert alpha_eq(d.subject, term)


def test_pt_application_spine():
    spine = parse_term("f" + "".join(f" x{i}" for i in range(40)))
    p = pt(spine)
    assert p is not None
    assert len(p.sigma) == 41
    assert skeleton(p.result.scheme) is not None
