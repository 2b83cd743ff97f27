import random

import pytest

from lightlam.eatypes import TArrow, TBang, TVar, parse_type
from lightlam.linsolve import SolverIncomplete, entails, sample, solve
from lightlam.schemes import (
    Constraint, NameSource, SArrow, SBang, SVar, Substitution, TypeScheme,
    apply_subst, banged, ceq, ceq0, cgt0, compose, exp_const, exp_lit,
    exp_sum, exp_value, identity_subst, satisfies, scheme_to_str, skeleton,
)
from lightlam.unify import UnifyFailure, unify, unify_with_instance

from genlib import (_named_base, ground_via, random_scheme, robinson,
                    unifiable_scheme_pair)


def _lit(n):
    return exp_lit(n)


def test_exponentials():
    e = exp_sum(_lit("a"), exp_sum(_lit("b"), exp_const(2)))
    assert exp_value(e, {"a": 1, "b": 3}) == 6
    with pytest.raises(KeyError):
        exp_value(e, {"a": 1})
    assert exp_value(exp_const(0), {}) == 0


def test_constraint_equality_is_symmetric():
    assert ceq(_lit("a"), _lit("b")) == ceq(_lit("b"), _lit("a"))
    assert len({ceq(_lit("a"), _lit("b")), ceq(_lit("b"), _lit("a"))}) == 1
    assert ceq(_lit("a"), _lit("b")) != cgt0(_lit("a"))
    c = ceq(_lit("a"), exp_const(0))
    assert c.holds({"a": 0}) and not c.holds({"a": 2})
    assert cgt0(_lit("a")).holds({"a": 1})
    assert ceq0(_lit("a")) == ceq(_lit("a"), exp_const(0))
    assert c.literals() == {"a"}


def test_satisfies():
    cs = {ceq(_lit("a"), _lit("b")), cgt0(_lit("a"))}
    assert satisfies(cs, {"a": 2, "b": 2})
    assert not satisfies(cs, {"a": 0, "b": 0})
    assert not satisfies(cs, {"a": 1, "b": 2})


def test_banged_collapses_nested_bangs():
    s = banged(_lit("a"), SBang(_lit("b"), SVar("'x")))
    assert s == SBang(exp_sum(_lit("a"), _lit("b")), SVar("'x"))
    assert scheme_to_str(s) == "!^{a+b} 'x"


def test_skeleton():
    # bangs vanish, scheme variables keep their quoted names
    z = SBang(_lit("a"), SArrow(SVar("'x"), SBang(_lit("b"), SVar("'x"))))
    assert skeleton(z) == TArrow(TVar("'x"), TVar("'x"))
    assert skeleton(TypeScheme(SVar("'y"), frozenset())) == TVar("'y")


def test_namesource():
    g = NameSource(avoid={"a0"})
    assert g.lit() == "a1"
    assert g.var() == "'v0"
    assert g.lit() == "a2"


def test_apply_subst_merges_bangs_with_fresh_literal():
    g = NameSource()
    t = Substitution({"'x": SBang(_lit("b"), SVar("'y"))}, frozenset())
    z = TypeScheme(SBang(_lit("a"), SVar("'x")), frozenset())
    out = apply_subst(t, z, g)
    assert isinstance(out.scheme, SBang) and out.scheme.body == SVar("'y")
    merged = out.scheme.exp
    # one fresh literal, constrained to the sum it replaced
    assert merged not in (_lit("a"), _lit("b"))
    assert ceq(merged, exp_sum(_lit("a"), _lit("b"))) in out.constraints


def test_identity_and_compose():
    g = NameSource()
    t1 = Substitution({"'x": SVar("'y")}, frozenset())
    t2 = Substitution({"'y": SArrow(SVar("'z"), SVar("'z"))},
                      frozenset({cgt0(_lit("k"))}))
    t = compose(t1, t2, g)
    assert t.mapping["'x"] == SArrow(SVar("'z"), SVar("'z"))
    assert cgt0(_lit("k")) in t.constraints
    i = identity_subst()
    z = TypeScheme(SVar("'x"), frozenset())
    assert apply_subst(i, z, g) == z


def test_unify_hand_cases():
    a, b = _lit("a"), _lit("b")
    # same variable: nothing to do
    u = unify(SVar("'x"), SVar("'x"))
    assert isinstance(u, Substitution) and not u.mapping

    # bang against bang: exponents equated, bodies recursed
    u = unify(SBang(a, SVar("'x")), SBang(b, SArrow(SVar("'p"), SVar("'q"))))
    assert isinstance(u, Substitution)
    assert ceq(a, b) in u.constraints
    assert u.mapping["'x"] == SArrow(SVar("'p"), SVar("'q"))

    # bang against arrow: the exponent is forced to zero
    u = unify(SBang(a, SVar("'x")), SArrow(SVar("'p"), SVar("'q")))
    assert isinstance(u, Substitution)
    assert ceq0(a) in u.constraints

    # occurs check, both orders
    assert unify(SVar("'x"), SArrow(SVar("'x"), SVar("'y"))).reason == "occurs"
    assert isinstance(unify(SArrow(SVar("'x"), SVar("'y")), SVar("'x")),
                      UnifyFailure)

    # arrow against arrow threads the left result through the right
    u = unify(SArrow(SVar("'x"), SVar("'x")),
              SArrow(SVar("'y"), SArrow(SVar("'y"), SVar("'z"))))
    assert isinstance(u, UnifyFailure)  # 'y = 'y -o 'z after sharing


def test_unify_with_instance_picks_fewer_summands():
    sub, omega = unify_with_instance(
        SBang(_lit("a"), SVar("'x")),
        SBang(exp_sum(_lit("b"), _lit("c")), SVar("'y")))
    assert omega == SBang(_lit("a"), SVar("'y"))
    assert ceq(_lit("a"), exp_sum(_lit("b"), _lit("c"))) in sub.constraints


def test_unify_ground_soundness():
    """Substituting a sampled solution into both sides of a unified pair
    gives the same ground type."""
    rng = random.Random(11)
    for _ in range(40):
        z1, z2 = unifiable_scheme_pair(rng)
        sub = unify(z1, z2)
        assert isinstance(sub, Substitution), str(sub)
        exps = sample(sub.constraints, rng)
        assert exps is not None
        g1 = ground_via(z1, sub.mapping, exps, _named_base)
        g2 = ground_via(z2, sub.mapping, exps, _named_base)
        assert g1 == g2


def test_unify_skeleton_matches_robinson():
    """Bang structure aside, unifiability coincides with plain
    first-order unification of the skeletons."""
    rng = random.Random(7)
    agree = 0
    for _ in range(120):
        s1 = random_scheme(rng, "l")
        s2 = random_scheme(rng, "r")
        mine = unify(s1, s2)
        ref = robinson(skeleton(s1), skeleton(s2))
        assert isinstance(mine, Substitution) == (ref is not None), \
            (scheme_to_str(s1), scheme_to_str(s2))
        agree += 1
    assert agree == 120


def test_solver_basics():
    a, b = _lit("a"), _lit("b")
    sol = solve({ceq(a, b), cgt0(a)}, prefer_small=True)
    assert sol == {"a": 1, "b": 1}
    assert solve({ceq(a, exp_const(0)), cgt0(a)}) is None
    assert solve(frozenset()) == {}
    # rationally feasible, integrally empty
    with pytest.raises(SolverIncomplete):
        solve({ceq(exp_sum(a, a), exp_const(1))})


def test_solver_entails():
    a, b, c = _lit("a"), _lit("b"), _lit("c")
    cs = {ceq(a, b), ceq(b, c)}
    assert entails(cs, ceq(a, c))
    assert not entails(cs, cgt0(a))
    assert entails({cgt0(a), ceq(a, b)}, cgt0(b))


def test_sample_satisfies():
    rng = random.Random(3)
    a, b = _lit("a"), _lit("b")
    cs = {ceq(exp_sum(a, b), _lit("c")), cgt0(b)}
    for _ in range(20):
        got = sample(cs, rng, variables=("d",), spread=3)
        assert got is not None
        assert satisfies(cs, got)
        assert "d" in got
    assert sample({cgt0(a), ceq(a, exp_const(0))}, rng) is None
