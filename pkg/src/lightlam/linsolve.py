"""Solver for bang-exponent constraint sets.

Constraints are equalities between unit-coefficient sums of naturals
(plus constants) and strict positivity demands.  Solving goes: force
obvious zeros, Gauss-reduce the equalities over exact rationals, then
check the remaining inequalities by Fourier-Motzkin elimination and
read a point off the bounds.  Candidate points are always re-verified
against the original set before being returned; scaling and rounding
repairs are attempted when the rational point is not integral.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil
import random

from .schemes import Constraint, ceq0, exp_const, exp_lit, satisfies


class SolverIncomplete(Exception):
    """A rational solution exists but no integer point was found."""


def _linear(e):
    c, k = e.flatten()
    return {n: Fraction(m) for n, m in c.items()}, Fraction(k)


def _diff(c: Constraint):
    """eq as lhs-rhs; gt0 as lhs; both as (coeffs, const)."""
    lc, lk = _linear(c.lhs)
    if c.kind == "eq":
        rc, rk = _linear(c.rhs)
        for n, m in rc.items():
            lc[n] = lc.get(n, Fraction(0)) - m
        return {n: m for n, m in lc.items() if m}, lk - rk
    return {n: m for n, m in lc.items() if m}, lk


def _zero_propagate(constraints):
    """Variables forced to zero by p=0 facts; None on contradiction."""
    zero: set[str] = set()
    cs = list(constraints)
    changed = True
    while changed:
        changed = False
        for c in cs:
            if c.kind != "eq":
                continue
            for side, other in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                sc, sk = _linear(side)
                if sk == 0 and all(v in zero for v in sc):
                    oc, ok = _linear(other)
                    if ok > 0:
                        return None
                    fresh = {v for v in oc if v not in zero}
                    if fresh:
                        zero |= fresh
                        changed = True
    for c in cs:
        if c.kind == "gt0":
            sc, sk = _linear(c.lhs)
            if sk == 0 and all(v in zero for v in sc):
                return None
    return zero


def _gauss(rows):
    """Row-reduce [coeffs = const] equations; None if 0 = nonzero appears.
    Returns pinned map: var -> (coeffs, const) meaning var = sum + const."""
    basis = []
    for coeffs, const in rows:
        coeffs = dict(coeffs)
        for pv, pc, pk in basis:
            if pv in coeffs:
                f = coeffs.pop(pv)
                for n, m in pc.items():
                    coeffs[n] = coeffs.get(n, Fraction(0)) + f * m
                const += f * pk
                coeffs = {n: m for n, m in coeffs.items() if m}
        if not coeffs:
            if const != 0:
                return None
            continue
        pivot = sorted(coeffs)[0]
        f = coeffs.pop(pivot)
        pc = {n: -m / f for n, m in coeffs.items()}
        pk = -const / f
        # substitute into earlier rows so the basis is fully reduced
        out = []
        for qv, qc, qk in basis:
            if pivot in qc:
                g = qc.pop(pivot)
                for n, m in pc.items():
                    qc[n] = qc.get(n, Fraction(0)) + g * m
                qk += g * pk
                qc = {n: m for n, m in qc.items() if m}
            out.append((qv, qc, qk))
        basis = out
        basis.append((pivot, pc, pk))
    return basis


def _fm(ineqs, order):
    """Fourier-Motzkin over rows (coeffs, const) meaning sum+const >= 0.
    Returns elimination stages for back-substitution, or None."""
    stages = []
    current = [(dict(c), k) for c, k in ineqs]
    for v in order:
        lower, upper, rest = [], [], []
        for coeffs, const in current:
            a = coeffs.get(v, Fraction(0))
            if a > 0:
                lower.append((a, coeffs, const))
            elif a < 0:
                upper.append((a, coeffs, const))
            else:
                rest.append((coeffs, const))
        new = list(rest)
        for la, lc, lk in lower:
            for ua, uc, uk in upper:
                coeffs = {}
                for n, m in lc.items():
                    if n != v:
                        coeffs[n] = coeffs.get(n, Fraction(0)) + m / la
                for n, m in uc.items():
                    if n != v:
                        coeffs[n] = coeffs.get(n, Fraction(0)) - m / ua
                coeffs = {n: m for n, m in coeffs.items() if m}
                new.append((coeffs, lk / la - uk / ua))
        stages.append((v, lower, upper))
        current = new
    for coeffs, const in current:
        if const < 0:
            return None
    return stages


def _fm_point(stages):
    """Smallest feasible value per variable, walking stages backwards."""
    point: dict[str, Fraction] = {}

    def rest_of(coeffs, const, v):
        return sum(m * point[n] for n, m in coeffs.items() if n != v) + const

    for v, lower, upper in reversed(stages):
        lo = Fraction(0)
        for a, coeffs, const in lower:
            lo = max(lo, -rest_of(coeffs, const, v) / a)
        point[v] = lo
    return point


def _feasible_point(eq_rows, ineq_rows, variables):
    """Solve equalities, then inequalities; returns fractional assignment
    over variables, or None when rationally infeasible."""
    basis = _gauss(eq_rows)
    if basis is None:
        return None
    pinned = {pv: (pc, pk) for pv, pc, pk in basis}
    free = sorted(v for v in variables if v not in pinned)

    def substitute(coeffs, const):
        out: dict[str, Fraction] = {}
        for n, m in coeffs.items():
            if n in pinned:
                pc, pk = pinned[n]
                for nn, mm in pc.items():
                    out[nn] = out.get(nn, Fraction(0)) + m * mm
                const += m * pk
            else:
                out[n] = out.get(n, Fraction(0)) + m
        return {n: m for n, m in out.items() if m}, const

    rows = [substitute({v: Fraction(1)}, Fraction(0)) for v in variables]
    rows.extend(substitute(c, k) for c, k in ineq_rows)
    stages = _fm(rows, free)
    if stages is None:
        return None
    point = _fm_point(stages)
    full = {v: point.get(v, Fraction(0)) for v in variables}
    for pv in pinned:
        pc, pk = pinned[pv]
        full[pv] = sum(m * full[n] for n, m in pc.items()) + pk
    return full


def _verify_int(constraints, frac_assign):
    if any(x.denominator != 1 or x < 0 for x in frac_assign.values()):
        return None
    assign = {v: int(x) for v, x in frac_assign.items()}
    return assign if satisfies(constraints, assign) else None


def solve(constraints, prefer_small: bool = False,
          extra_vars=()) -> dict[str, int] | None:
    """A natural-number assignment satisfying every constraint, or None.

    prefer_small greedily decrements the verified point.  extra_vars
    join the assignment even when no constraint mentions them.
    """
    constraints = list(constraints)
    variables = set(extra_vars)
    for c in constraints:
        variables |= c.literals()
    zero = _zero_propagate(constraints)
    if zero is None:
        return None
    live = sorted(variables - zero)

    def reduce_c(c):
        coeffs, const = _diff(c)
        return {n: m for n, m in coeffs.items() if n not in zero}, const

    eq_rows, ineq_rows = [], []
    for c in constraints:
        coeffs, const = reduce_c(c)
        if c.kind == "eq":
            eq_rows.append((coeffs, const))
        else:
            ineq_rows.append((coeffs, const - 1))   # expr >= 1
    frac = _feasible_point(eq_rows, ineq_rows, live)
    if frac is None:
        return None
    for v in zero:
        frac[v] = Fraction(0)
    for v in variables:
        frac.setdefault(v, Fraction(0))

    candidates = [frac]
    lcd = 1
    for x in frac.values():
        lcd = lcd * x.denominator // _gcd(lcd, x.denominator)
    if lcd > 1:
        candidates.append({v: x * lcd for v, x in frac.items()})
    candidates.append({v: Fraction(ceil(x)) for v, x in frac.items()})
    assign = None
    for cand in candidates:
        assign = _verify_int(constraints, cand)
        if assign is not None:
            break
    if assign is None:
        assign = _nudge(constraints, frac)
    if assign is None:
        raise SolverIncomplete("rationally feasible but no integer point located")
    if prefer_small:
        assign = _shrink(constraints, assign)
    return assign


def _gcd(a, b):
    a, b = int(a), int(b)
    while b:
        a, b = b, a % b
    return a


def _nudge(constraints, frac, rounds=64):
    assign = {v: max(0, ceil(x)) for v, x in frac.items()}
    for _ in range(rounds):
        if satisfies(constraints, assign):
            return assign
        progressed = False
        for c in constraints:
            if c.holds(assign):
                continue
            for v in sorted(c.literals()):
                for delta in (1, -1):
                    if assign[v] + delta < 0:
                        continue
                    assign[v] += delta
                    if c.holds(assign):
                        progressed = True
                        break
                    assign[v] -= delta
                if progressed:
                    break
            break
        if not progressed:
            return None
    return assign if satisfies(constraints, assign) else None


def _shrink(constraints, assign):
    assign = dict(assign)
    changed = True
    while changed:
        changed = False
        for v in sorted(assign):
            while assign[v] > 0:
                assign[v] -= 1
                if satisfies(constraints, assign):
                    changed = True
                else:
                    assign[v] += 1
                    break
    return assign


def feasible_with(constraints, ineq_rows) -> bool:
    """Rational feasibility of the constraints plus raw rows sum+const >= 0."""
    constraints = list(constraints)
    variables = set()
    for c in constraints:
        variables |= c.literals()
    for coeffs, _ in ineq_rows:
        variables |= set(coeffs)
    eq_rows, extra = [], []
    for c in constraints:
        coeffs, const = _diff(c)
        if c.kind == "eq":
            eq_rows.append((coeffs, const))
        else:
            extra.append((coeffs, const - 1))
    rows = extra + [({n: Fraction(m) for n, m in coeffs.items()}, Fraction(k))
                    for coeffs, k in ineq_rows]
    return _feasible_point(eq_rows, rows, sorted(variables)) is not None


def entails(constraints, c: Constraint) -> bool:
    """Rational entailment: the constraints leave no room to violate c."""
    base = list(constraints)
    if c.kind == "gt0":
        coeffs, const = _diff(c)
        return not feasible_with(base, [({n: -m for n, m in coeffs.items()},
                                         -const)])
    coeffs, const = _diff(c)
    # violating p=q means p-q >= 1 or q-p >= 1
    hi = feasible_with(base, [(coeffs, const - 1)])
    lo = feasible_with(base, [({n: -m for n, m in coeffs.items()}, -const - 1)])
    return not hi and not lo


def sample(constraints, rng: random.Random, variables=(), spread=2,
           tries=24) -> dict[str, int] | None:
    """A randomized satisfying assignment (pin random vars, then solve)."""
    base = solve(constraints, extra_vars=variables)
    if base is None:
        return None
    names = sorted(set(base) | set(variables))
    for _ in range(tries):
        pins = []
        for v in names:
            if rng.random() < 0.5:
                val = rng.randrange(0, spread + 1)
                pins.append(Constraint("eq", exp_lit(v), exp_const(val)))
        try:
            got = solve(list(constraints) + pins, extra_vars=variables)
        except SolverIncomplete:
            got = None
        if got is not None:
            return got
    return base
