import pytest

from lightlam.eatypes import parse_type
from lightlam.etas import (ContextTriple, EtasCheckError, EtasDerivation,
                           check_etas_derivation, is_typing, measures,
                           reduce_derivation, substitute_derivation,
                           transform)
from lightlam.terms import Abs, App, Var, is_value, parse_term

A = parse_type("a")
AA = parse_type("a -o a")
B = parse_type("!(a -o a)")
C = parse_type("!(a -o a) -o !(a -o a)")
bC = parse_type("!(!(a -o a) -o !(a -o a))")


def doubling_derivation():
    """Hand derivation for \\x.\\y.x(x y) at !C -o !C.

    y enters banged through the modal slot, x is parked while the two
    copies are consumed and only boxes into the modal slot afterwards.
    """
    axL_y = EtasDerivation("A^L", ContextTriple({"y": AA}, {}, {}),
                           Var("y"), AA)
    bang_y = EtasDerivation("!", ContextTriple({}, {"y": B}, {"x": C}),
                            Var("y"), B, (axL_y,))
    axP_x1 = EtasDerivation("A^P", ContextTriple({}, {"y": B}, {"x": C}),
                            Var("x"), C)
    app_xy = EtasDerivation("E-o", ContextTriple({}, {"y": B}, {"x": C}),
                            App(Var("x"), Var("y")), B, (axP_x1, bang_y))
    axP_x2 = EtasDerivation("A^P", ContextTriple({}, {"y": B}, {"x": C}),
                            Var("x"), C)
    app_outer = EtasDerivation(
        "E-o", ContextTriple({}, {"y": B}, {"x": C}),
        App(Var("x"), App(Var("x"), Var("y"))), B, (axP_x2, app_xy))
    abs_y = EtasDerivation("I-o^I", ContextTriple({}, {}, {"x": C}),
                           Abs("y", app_outer.subject), parse_type("!(a -o a) -o !(a -o a)"),
                           (app_outer,))
    bang_abs = EtasDerivation("!", ContextTriple({}, {"x": bC}, {}),
                              abs_y.subject, bC, (abs_y,))
    top = EtasDerivation("I-o^I", ContextTriple({}, {}, {}),
                         Abs("x", abs_y.subject), parse_type(
                             "!(!(a -o a) -o !(a -o a)) -o !(!(a -o a) -o !(a -o a))"),
                         (bang_abs,))
    return top, bang_abs, axL_y


def boxed_identity():
    axu = EtasDerivation("A^I", ContextTriple({}, {"u": B}, {}), Var("u"), B)
    idu = EtasDerivation("I-o^I", ContextTriple({}, {}, {}),
                         Abs("u", Var("u")), C, (axu,))
    return EtasDerivation("!", ContextTriple({}, {}, {}), idu.subject, bC, (idu,))


def test_doubling_derivation_checks():
    top, _, _ = doubling_derivation()
    check_etas_derivation(top)
    assert is_typing(top)
    assert top.subject == parse_term(r"\x.\y.x(x y)")
    m = measures(top)
    assert m.sizes == (1, 5, 1)
    assert m.level == 2 and m.total == 7 and m.size(5) == 0


def test_weaken_preserves_profile():
    top, _, _ = doubling_derivation()
    w = transform(top, "weaken", gamma={"w": A}, delta={"v": B})
    check_etas_derivation(w)
    assert measures(w).sizes == (1, 5, 1)
    assert w.ctx.gamma == {"w": A} and w.ctx.delta == {"v": B}
    assert not is_typing(transform(top, "weaken", theta={"p": A}))
    with pytest.raises(EtasCheckError):
        transform(top, "weaken", gamma={"v": B})  # modal type, wrong slot
    with pytest.raises(EtasCheckError):
        transform(top, "weaken", delta={"v": A})


def test_shift_moves_linear_to_parking():
    _, _, axL_y = doubling_derivation()
    sh = transform(axL_y, "shift", var="y")
    check_etas_derivation(sh)
    assert sh.rule == "A^P" and sh.ctx.theta == {"y": AA}
    with pytest.raises(EtasCheckError):
        transform(sh, "shift", var="y")  # already parked


def test_contract_merges_parked_copies():
    ctx = ContextTriple({}, {"w": B}, {"x1": C, "x2": C})
    ax1 = EtasDerivation("A^P", ctx, Var("x1"), C)
    axw = EtasDerivation("A^I", ctx, Var("w"), B)
    ax2 = EtasDerivation("A^P", ctx, Var("x2"), C)
    inner = EtasDerivation("E-o", ctx, App(Var("x2"), Var("w")), B, (ax2, axw))
    outer = EtasDerivation("E-o", ctx, App(Var("x1"), inner.subject), B,
                           (ax1, inner))
    check_etas_derivation(outer)
    c = transform(outer, "contract", var1="x1", var2="x2", fresh="x")
    check_etas_derivation(c)
    assert c.subject == parse_term("x (x w)")
    assert set(c.ctx.theta) == {"x"}
    assert measures(c).sizes == measures(outer).sizes == (4, 1)
    with pytest.raises(EtasCheckError):
        transform(outer, "contract", var1="x1", var2="w", fresh="q")


def test_check_rejects_bad_nodes():
    with pytest.raises(EtasCheckError, match="missing from the linear part"):
        check_etas_derivation(
            EtasDerivation("A^L", ContextTriple({}, {}, {"y": A}), Var("y"), A))
    with pytest.raises(EtasCheckError, match="modal slot holds linear"):
        check_etas_derivation(
            EtasDerivation("A^I", ContextTriple({}, {"m": A}, {}), Var("m"), A))
    with pytest.raises(EtasCheckError, match="parking slot holds modal"):
        ContextTriple({}, {}, {"w": B}).validate()
    axu = EtasDerivation("A^L", ContextTriple({"u": A}, {}, {}), Var("u"), A)
    with pytest.raises(EtasCheckError, match="arrow elimination"):
        check_etas_derivation(
            EtasDerivation("E-o", ContextTriple({"u": A}, {}, {}),
                           App(Var("u"), Var("u")), A, (axu, axu)))
    # boxing moves premise hypotheses into the modal slot with exactly
    # one extra bang; any other count is rejected
    idv = EtasDerivation("I-o^L", ContextTriple({"v": A}, {}, {}),
                         Abs("u", Var("u")), AA,
                         (transform(axu, "weaken", gamma={"v": A}),))
    good = EtasDerivation("!", ContextTriple({}, {"v": parse_type("!a")}, {}),
                          idv.subject, parse_type("!(a -o a)"), (idv,))
    check_etas_derivation(good)
    with pytest.raises(EtasCheckError, match="banged in the modal part"):
        check_etas_derivation(
            EtasDerivation("!", ContextTriple({}, {"v": parse_type("!!a")}, {}),
                           idv.subject, parse_type("!(a -o a)"), (idv,)))
    with pytest.raises(EtasCheckError, match="unknown rule"):
        check_etas_derivation(
            EtasDerivation("??", ContextTriple({}, {}, {}), Var("x"), A))


def test_linear_beta():
    axz = EtasDerivation("A^L", ContextTriple({"z": A}, {}, {}), Var("z"), A)
    idf = EtasDerivation("I-o^L", ContextTriple({}, {}, {}),
                         Abs("z", Var("z")), AA, (axz,))
    axw = EtasDerivation("A^L", ContextTriple({"w": A}, {}, {}), Var("w"), A)
    red = EtasDerivation("E-o", ContextTriple({"w": A}, {}, {}),
                         App(idf.subject, Var("w")), A, (idf, axw))
    check_etas_derivation(red)
    lvl, out = reduce_derivation(red, ())
    check_etas_derivation(out)
    assert lvl == 0
    assert out.subject == Var("w") and out.ctx.gamma == {"w": A}
    assert out.type == A


def test_modal_beta():
    axzI = EtasDerivation("A^I", ContextTriple({}, {"z": B, "w": B}, {}),
                          Var("z"), B)
    idI = EtasDerivation("I-o^I", ContextTriple({}, {"w": B}, {}),
                         Abs("z", Var("z")), parse_type("!(a -o a) -o !(a -o a)"),
                         (axzI,))
    axwI = EtasDerivation("A^I", ContextTriple({}, {"w": B}, {}), Var("w"), B)
    redI = EtasDerivation("E-o", ContextTriple({}, {"w": B}, {}),
                          App(idI.subject, Var("w")), B, (idI, axwI))
    check_etas_derivation(redI)
    lvl, out = reduce_derivation(redI, ())
    check_etas_derivation(out)
    assert out.subject == Var("w") and out.ctx.delta == {"w": B}


def test_substitution_size_bound():
    """Plugging rho in for a parked variable below a box duplicates rho
    across the copies; the level-wise growth stays within
    S(out, i) <= (sum_{j<=i} S(pi, j)) * S(rho, i) + S(pi, i)
    and the ground level never grows."""
    _, bang_abs, _ = doubling_derivation()
    rho = boxed_identity()
    check_etas_derivation(rho)
    out = substitute_derivation(bang_abs, "x", rho)
    check_etas_derivation(out)
    assert out.ctx.names() == set()
    assert out.subject == parse_term(r"\y.(\u.u)((\u.u)y)")
    ms, mp, mr = measures(out), measures(bang_abs), measures(rho)
    assert ms.size(0) <= mp.size(0)
    for i in range(1, max(len(ms.sizes), len(mp.sizes), len(mr.sizes))):
        cap = sum(mp.size(j) for j in range(i + 1)) * mr.size(i) + mp.size(i)
        assert ms.size(i) <= cap


def _leftmost_cbv_redex(t, path=()):
    if isinstance(t, App):
        if isinstance(t.fn, Abs) and is_value(t.arg):
            return path
        p = _leftmost_cbv_redex(t.fn, path + (0,))
        if p is not None:
            return p
        return _leftmost_cbv_redex(t.arg, path + (1,))
    if isinstance(t, Abs):
        return _leftmost_cbv_redex(t.body, path + (0,))
    return None


def test_reduce_to_normal_form():
    top, _, _ = doubling_derivation()
    rho = boxed_identity()
    d = EtasDerivation("E-o", ContextTriple({}, {}, {}),
                       App(top.subject, rho.subject), bC, (top, rho))
    check_etas_derivation(d)
    levels = []
    while True:
        occ = _leftmost_cbv_redex(d.subject)
        if occ is None:
            break
        lvl, d = reduce_derivation(d, occ)
        check_etas_derivation(d)
        levels.append(lvl)
    assert d.subject == parse_term(r"\y.y")
    assert d.type == bC and is_typing(d)
    assert len(levels) == 3
