import pytest

from lightlam.ea import (NealCheckError, NealDerivation, check_neal, ea_step,
                         etas_to_neal, is_expansion, neal_to_etas,
                         neal_weaken, reduce_administrative, simulate_cbv,
                         translate_sharp, translate_star)
from lightlam.eatypes import TVar, parse_type
from lightlam.etas import check_etas_derivation, is_typing
from lightlam.infer import instantiate, pt
from lightlam.linsolve import solve
from lightlam.schemes import SchemeSubstitution, cgt0, scheme_vars
from lightlam.terms import (EContract, EVar, alpha_eq, eaterm_to_str,
                            is_affine, length, parse_eaterm, parse_term,
                            term_to_str)


def test_translate_star():
    assert term_to_str(translate_star(parse_eaterm("(x y)[z/x,y]"))) == "z z"
    assert alpha_eq(translate_star(parse_eaterm(r"!(x)[(\w.w)/x]")),
                    parse_term(r"\w.w"))
    assert alpha_eq(translate_star(parse_eaterm(r"\x.x")), parse_term(r"\x.x"))


def test_translate_sharp():
    t = translate_sharp(parse_eaterm(r"(x y)[(\w.w)/x,y]"))
    assert alpha_eq(t, parse_term(r"(\z.z z)(\w.w)"))
    # a box around a variable body is dropped
    assert term_to_str(translate_sharp(parse_eaterm("!(x)[y/x]"))) == "y"
    # a non-value box body stays as an administrative redex
    t = translate_sharp(parse_eaterm(r"!(x)[((\w.w)(\v.v))/x]"))
    assert alpha_eq(t, parse_term(r"(\x.x)((\w.w)(\v.v))"))


@pytest.mark.parametrize("src", [
    r"(x y)[(\w.w)/x,y]",
    r"!(x y)[(\w.w)/x, z/y]",
    r"!(x)[]",
    r"((x y)[z/x,y]) (w q)[!(a)[]/w,q]",
])
def test_sharp_at_most_doubles_length(src):
    n = parse_eaterm(src)
    assert length(translate_sharp(n)) <= 2 * length(n)


@pytest.mark.parametrize("src", [
    r"(x y)[(\w.w)/x,y]",
    r"!(x y)[(\w.w)/x, z/y]",
    r"((x y)[z/x,y]) (w q)[!(a)[]/w,q]",
    r"!(x (y q))[(\w.w)/x, !(v)[u/v]/y, (a b)/q]",
])
def test_administrative_reduction_reaches_star(src):
    n = parse_eaterm(src)
    got = reduce_administrative(translate_sharp(n))
    assert alpha_eq(got, translate_star(n))


def test_step_beta():
    r = ea_step(parse_eaterm(r"(\x.x) y"))
    assert [(name, eaterm_to_str(t)) for name, t in r] == [("beta", "y")]


def test_step_abs_c():
    r = dict(ea_step(parse_eaterm(r"\x.(y)[z/y1,y2]")))
    assert "abs-c" in r
    assert eaterm_to_str(r["abs-c"]).startswith(r"(\x.y)[")


def test_step_dup():
    m = parse_eaterm(r"(z1 z2)[!(x)[w/x]/z1,z2]")
    dups = [t for name, t in ea_step(m) if name == "dup"]
    assert len(dups) == 1
    d = dups[0]
    assert is_affine(d)
    assert alpha_eq(translate_star(d), translate_star(m))


def test_step_box_box():
    r = dict(ea_step(parse_eaterm(r"!(x)[!(y)[z/y]/x]")))
    assert "box-box" in r
    assert eaterm_to_str(r["box-box"]) == "!(y)[z/y]"


@pytest.mark.parametrize("src", [
    r"(z1 z2)[!(x)[w/x]/z1,z2]",
    r"((\x.x) y) ((a)[!(b)[]/a1,a2])",
    r"!((x)[v/x1,x2])[((\q.q) p)/v]",
])
def test_reducts_stay_affine(src):
    m = parse_eaterm(src)
    assert ea_step(m)
    for name, t in ea_step(m):
        assert is_affine(t), (name, eaterm_to_str(t))


def test_is_expansion():
    assert is_expansion(parse_eaterm("!(x y)[a/x, b/y]"))
    assert not is_expansion(parse_eaterm(r"!(x)[(\w.w)/x]"))
    assert is_expansion(parse_eaterm("(!(x)[y/x])[z/a,b]"))
    assert not is_expansion(parse_eaterm(r"(!(x)[y/x])[(\w.w)/a,b]"))


def test_neal_axiom_and_unbanged_cut():
    A = parse_type("a")
    ax = NealDerivation("A", {"x": A, "q": parse_type("!b")}, EVar("x"), A)
    check_neal(ax)
    aa = parse_type("a -o a")
    bad = NealDerivation(
        "C", {"m": aa}, EContract(EVar("x"), EVar("m"), "x", "y"), aa,
        (NealDerivation("A", {"m": aa}, EVar("m"), aa),
         NealDerivation("A", {"x": aa, "y": aa}, EVar("x"), aa)))
    with pytest.raises(NealCheckError, match="banged"):
        check_neal(bad)


def doubling_neal():
    two = parse_term(r"\x.\y.x (x y)")
    p = pt(two)
    S = SchemeSubstitution(
        types={"'v2": parse_type("A -o A")},
        exps={f"a{i}": (1 if i in (2, 3, 5, 7, 8) else 0) for i in range(10)})
    _, _, ty, deriv = instantiate(p, S)
    assert is_typing(deriv)
    return two, ty, deriv


def test_roundtrip_doubling():
    two, ty, deriv = doubling_neal()
    n, nd = etas_to_neal(deriv)
    check_neal(nd)
    assert is_affine(n)
    assert alpha_eq(translate_sharp(n), two)
    assert nd.ctx == {}
    back = neal_to_etas(nd)
    check_etas_derivation(back)
    assert alpha_eq(back.subject, two)
    assert back.type == ty
    assert back.ctx.names() == set()


def test_roundtrip_identity():
    idp = pt(parse_term(r"\x.x"))
    S = SchemeSubstitution(types={"'v0": TVar("A")}, exps={"a0": 0, "a1": 0})
    _, _, _, d = instantiate(idp, S)
    n, nd = etas_to_neal(d)
    check_neal(nd)
    assert alpha_eq(translate_sharp(n), parse_term(r"\x.x"))


def test_roundtrip_shared_open_variable():
    """x used twice: the sharing image contracts the copies at a box and
    keeps x free in the context."""
    shared = parse_term(r"\y.x (x y)")
    p = pt(shared)
    # a parking-free root needs x in the modal part: outer exponent > 0
    sol = solve(p.constraints | {cgt0(p.sigma["x"].scheme.exp)})
    vs = set()
    for z in list(p.sigma.values()) + [p.result]:
        vs |= scheme_vars(z.scheme)
    S = SchemeSubstitution(types={v: TVar("A") for v in vs}, exps=sol)
    _, _, _, d = instantiate(p, S)
    n, nd = etas_to_neal(d)
    check_neal(nd)
    assert is_affine(n)
    assert alpha_eq(translate_sharp(n), shared)
    assert set(nd.ctx) == {"x"}


def test_neal_weaken():
    _, _, deriv = doubling_neal()
    _, nd = etas_to_neal(deriv)
    w = neal_weaken(nd, {"q": parse_type("!c")})
    check_neal(w)
    assert "q" in w.ctx


def test_simulate_cbv_direct():
    res = simulate_cbv(parse_eaterm(r"(\x.x)(\y.y)"))
    assert res.status == "ok" and len(res.path) == 2
    assert alpha_eq(translate_sharp(res.path[-1]), parse_term(r"\y.y"))


def test_simulate_cbv_no_redex():
    assert simulate_cbv(parse_eaterm(r"!(\x.x)[]")).status == "no-redex"


def test_simulate_cbv_through_sharing():
    """A contracted box is unfolded by a dup step whose readback is the
    cbv reduct; the path stays inside the step relation."""
    m = parse_eaterm(r"(z1 z2)[!(\x.x)[]/z1,z2]")
    res = simulate_cbv(m)
    assert res.status == "ok"
    assert alpha_eq(translate_sharp(res.path[-1]),
                    parse_term(r"(\x.x)(\x.x)"))
    for a, b in zip(res.path, res.path[1:]):
        assert any(alpha_eq(b, t) for _, t in ea_step(a))
