import pytest

from lightlam.algebra import numeral, numeral_value, unary_signature
from lightlam.eatypes import parse_type
from lightlam.etas import check_etas_derivation, measures
from lightlam.evaluate import (EvalError, FuelExhausted, delta_reduce_derivation,
                               elementary_bounds, instrumented_reduce,
                               normalize, step)
from lightlam.infer import instantiate, pt
from lightlam.linsolve import solve
from lightlam.schemes import SchemeSubstitution, scheme_vars
from lightlam.terms import App, Const, parse_term, term_to_str

SIG = unary_signature()


def _typed(src, base="b", signature=None):
    p = pt(parse_term(src, signature), signature)
    sol = solve(p.constraints)
    vs = set()
    for z in list(p.sigma.values()) + [p.result]:
        vs |= scheme_vars(z.scheme)
    S = SchemeSubstitution(types={v: parse_type(base) for v in vs}, exps=sol)
    _, _, _, d = instantiate(p, S)
    return d


def test_step_basics():
    m = parse_term(r"(\x.x)(\y.y)")
    assert step(m, "cbv") == ((), parse_term(r"\y.y"))
    assert step(m, "cbn") == ((), parse_term(r"\y.y"))
    assert step(parse_term(r"\x.x"), "cbv") is None
    with pytest.raises(EvalError, match="unknown strategy"):
        step(m, "lazy")


def test_step_strategy_order():
    # cbv evaluates the argument first, cbn fires the head redex
    m = parse_term(r"(\x.x)((\y.y)(\z.z))")
    occ, _ = step(m, "cbv")
    assert occ == (1,)
    occ, t = step(m, "cbn")
    assert occ == () and t == parse_term(r"(\y.y)(\z.z)")


def test_weak_vs_strong():
    w = parse_term(r"\x.(\y.y)x")
    assert step(w, "cbv") is None  # weak evaluation stops at lambdas
    occ, _ = step(w, "cbv", strong=True)
    assert occ == (0,)
    n, _ = normalize(w, "cbv", 50, strong=True)
    assert n == parse_term(r"\x.x")


def test_weak_cbn_cbv_disagree_on_discarded_divergence():
    ko = parse_term(r"(\x.\y.y)((\z.z z)(\z.z z))")
    n, tr = normalize(ko, "cbn", 50)
    assert n == parse_term(r"\y.y") and len(tr) == 1
    assert tr.initial == ko
    with pytest.raises(FuelExhausted) as ei:
        normalize(ko, "cbv", 30)
    assert len(ei.value.trace) == 30
    # but under strong reduction both strategies agree where both finish
    t = parse_term(r"\x.(\y.y)((\w.w) x)")
    sv, _ = normalize(t, "cbv", 50, strong=True)
    sn, _ = normalize(t, "cbn", 50, strong=True)
    assert sv == sn == parse_term(r"\x.x")


def test_constant_steps():
    m = App(App(App(Const("iter_U"), numeral(2)), parse_term(r"\y.s_U y", SIG)),
            App(Const("s_U"), numeral(0)))
    n, tr = normalize(m, "cbv", 200, signature=SIG)
    assert numeral_value(n) == 3
    assert len(tr) == 3
    # a constructor waits for its argument
    m2 = App(Const("s_U"), App(parse_term(r"\y.y", SIG), numeral(1)))
    occ, t = step(m2, "cbv", signature=SIG)
    assert occ == (1,) and numeral_value(t) == 2


def test_instrumented_reduce_clean_run():
    d = _typed(r"(\x.\y.x (x y)) (\z.z)")
    run = instrumented_reduce(d, 100)
    assert run.violations == ()
    assert len(run.trace) == 1
    s = run.trace.steps[0]
    assert s.level == 0 and s.occurrence == ()
    assert s.profile is not None
    assert run.derivation.subject == parse_term(r"\y.(\z.z) ((\z.z) y)")
    check_etas_derivation(run.derivation)


def test_instrumented_reduce_with_constants():
    d = _typed(r"(\w.w) (s_U z_U)", base="U", signature=SIG)
    run = instrumented_reduce(d, 50, signature=SIG)
    assert run.violations == () and len(run.trace) == 1
    assert term_to_str(run.derivation.subject) == "s_U z_U"


def test_delta_reduce_derivation():
    d = _typed(r"iter_U (s_U z_U) (\y.s_U y) (s_U z_U)", base="U",
               signature=SIG)
    occ, t = step(d.subject, "cbv", signature=SIG)
    assert occ == () and t == parse_term(r"(\y.s_U y) (s_U z_U)", SIG)
    lvl, d2 = delta_reduce_derivation(d, occ, SIG)
    check_etas_derivation(d2, SIG)
    assert lvl == 0
    assert d2.subject == t and d2.type == d.type
    # the step count at the redex level shrinks or holds
    assert measures(d2).size(0) <= measures(d).size(0)


def test_elementary_bounds_values():
    bt = elementary_bounds(1, 1)
    assert bt.f == (1, 17) and bt.g == (1, 18)
    assert bt.depth == 1 and bt.size == 1
    bt = elementary_bounds(2, 3)
    assert bt.f[0] == bt.g[0] == 3
    assert bt.f[1] == 3 + 6 ** 16
    assert bt.f[2] == float("inf") and bt.g[2] == float("inf")
    bt = elementary_bounds(3, 10)
    assert bt.f[3] == float("inf")
    with pytest.raises(EvalError):
        elementary_bounds(-1, 2)


def test_bounds_monotone_in_depth_and_size():
    for n in (1, 2, 5):
        bt = elementary_bounds(2, n)
        assert bt.f[0] <= bt.f[1] <= bt.f[2]
        assert bt.g[0] <= bt.g[1] <= bt.g[2]
    assert elementary_bounds(1, 3).f[1] <= elementary_bounds(1, 4).f[1]
