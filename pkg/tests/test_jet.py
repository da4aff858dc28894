from __future__ import annotations

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from _strategies import trees
from implicit_ode.errors import Degenerate, EvaluationError, NoRootFound, ResidualTooLarge
from implicit_ode.expr import Num, Var, differentiate, evaluate
from implicit_ode.jet import Mode, check_base_point, implicit_jet, jet_closed_form_check, solve_missing_coordinate
from implicit_ode.numeric import finite_difference_jet
from implicit_ode.parser import parse

SQ3 = math.sqrt(3.0)
BERNOULLI = parse("-3*sin(x)*p^(4/3) - q")
BERNOULLI_T0 = (math.pi / 3, 1.0, -1.5 * SQ3)
CIRCLE = parse("p^2 + q^2 - 1")
CIRCLE_T0 = (math.pi / 2, 1.0, 0.0)


def bubble(R0=0.1):
    return parse(f"2/3*{R0}^3 - (2/3 + q^2)*p^3")


# --- base points -------------------------------------------------------------

def test_linear_base_point_valid():
    b = check_base_point(parse("2*p - q"), (0, 1, 2), Mode.SOLVE_FOR_Q)
    assert b.pivot == -1.0


def test_circle_degenerate_in_q():
    with pytest.raises(Degenerate) as info:
        check_base_point(CIRCLE, CIRCLE_T0, "q")
    assert info.value.variable == "q"


def test_circle_valid_in_p():
    assert check_base_point(CIRCLE, CIRCLE_T0, "p").pivot == 2.0


def test_residual_too_large():
    with pytest.raises(ResidualTooLarge):
        check_base_point(CIRCLE, (0.0, 1.0, 0.5), "p")


def test_time_variable_detected():
    b = check_base_point(bubble(), (0.0, 0.1, 0.0), "p", indep="t")
    assert b.indep == "t"
    assert check_base_point(parse("q - t"), (0, 0, 0), "q").indep == "t"


def test_missing_coordinate_double_root():
    assert solve_missing_coordinate(bubble(), x0=0.0, p0=0.1, bracket=(-1, 1), indep="t") == pytest.approx(0.0, abs=1e-9)


def test_missing_coordinate_linear():
    assert solve_missing_coordinate(parse("2*p - q"), x0=0.0, p0=1.0, bracket=(0, 4)) == pytest.approx(2.0, abs=1e-12)
    assert solve_missing_coordinate(parse("q - x"), x0=5.0, p0=3.7, bracket=(0, 10)) == pytest.approx(5.0, abs=1e-12)


def test_missing_coordinate_no_root():
    with pytest.raises(NoRootFound):
        solve_missing_coordinate(parse("q^2 + 1"), x0=0.0, p0=0.0, bracket=(-1, 1))


# --- jets --------------------------------------------------------------------

def test_bernoulli_jet():
    base = check_base_point(BERNOULLI, BERNOULLI_T0, "q")
    jet = implicit_jet(BERNOULLI, base, (3, 1))
    assert jet[0, 0] == base.q0
    assert jet[1, 0] == pytest.approx(-1.5, rel=1e-10)
    assert jet[2, 0] == pytest.approx(1.5 * SQ3, rel=1e-10)
    assert jet[0, 1] == pytest.approx(-2 * SQ3, rel=1e-10)
    assert jet[3, 0] == pytest.approx(1.5, rel=1e-10)


def test_bubble_jet():
    base = check_base_point(bubble(0.1), (0.0, 0.1, 0.0), "p", indep="t")
    jet = implicit_jet(bubble(0.1), base, (1, 2))
    assert jet[1, 0] == 0.0 and jet[0, 1] == 0.0
    assert jet[0, 2] == pytest.approx(-0.1, rel=1e-12)


def test_circle_jet():
    base = check_base_point(CIRCLE, CIRCLE_T0, "p")
    jet = implicit_jet(CIRCLE, base, (1, 2))
    assert (jet[1, 0], jet[0, 1], jet[0, 2]) == (0.0, 0.0, -1.0)


def test_order_cap():
    base = check_base_point(CIRCLE, CIRCLE_T0, "p")
    with pytest.raises(ValueError):
        implicit_jet(CIRCLE, base, (3, 2))


def test_closed_form_checks():
    lin = jet_closed_form_check(parse("2*p - q"), check_base_point(parse("2*p - q"), (0, 1, 2), "q"))
    assert lin.entry("first order, free variable").expected == 2.0
    assert lin.entry("first order, free variable").abs_delta == 0.0
    circ = jet_closed_form_check(CIRCLE, check_base_point(CIRCLE, CIRCLE_T0, "p"))
    assert circ.entry("second order, free variable").expected == -1.0
    assert not circ.discrepancies


def test_closed_form_flags_quoted_third_derivative():
    base = check_base_point(BERNOULLI, BERNOULLI_T0, "q")
    report = jet_closed_form_check(BERNOULLI, base, printed={(3, 0): 1.5 * SQ3})
    assert report.entry("third order, independent variable").agrees()
    flagged = {e.label for e in report.discrepancies}
    assert "printed D(3, 0)" in flagged
    assert "third order with free-variable partials" in flagged


# --- properties --------------------------------------------------------------

@settings(max_examples=50)
@given(trees(names=("x", "p"), max_leaves=8), st.floats(-1.5, 1.5), st.floats(0.2, 1.5))
def test_jet_of_explicit_function(g, x0, p0):
    F = Var("q") - g
    try:
        q0 = evaluate(g, {"x": x0, "p": p0})
        base = check_base_point(F, (x0, p0, q0), "q")
        jet = implicit_jet(F, base, (2, 1))
        oracle = {}
        for i in range(3):
            for j in range(2):
                d = g
                for _ in range(i):
                    d = differentiate(d, "x")
                for _ in range(j):
                    d = differentiate(d, "p")
                oracle[i, j] = evaluate(d, {"x": x0, "p": p0})
    except EvaluationError:
        assume(False)
    assume(all(math.isfinite(v) and abs(v) < 1e8 for v in oracle.values()))
    for idx, v in oracle.items():
        assert jet[idx] == pytest.approx(v, rel=1e-9, abs=1e-9)


@settings(max_examples=40)
@given(trees(names=("x", "p"), max_leaves=8), st.floats(-1.5, 1.5), st.floats(0.2, 1.5))
def test_mode_reciprocity(g, x0, p0):
    F = Var("q") - g
    try:
        q0 = evaluate(g, {"x": x0, "p": p0})
        a = implicit_jet(F, check_base_point(F, (x0, p0, q0), "q"), (0, 1))
        b = implicit_jet(F, check_base_point(F, (x0, p0, q0), "p"), (0, 1))
    except (EvaluationError, Degenerate):
        assume(False)
    assume(math.isfinite(a[0, 1]) and abs(a[0, 1]) < 1e6)
    assert a[0, 1] * b[0, 1] == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30)
@given(
    st.lists(st.integers(-3, 3), min_size=10, max_size=10),
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
)
def test_jet_matches_continuation(coeffs, x0, p0, q0):
    x, p, q = Var("x"), Var("p"), Var("q")
    monomials = [x, p, q, x * p, x * q, p * q, x * x, p * p, q * q, x * p * q]
    G = Num(0)
    for c, m in zip(coeffs, monomials):
        G = G + Num(c) * m
    G = G + q * q * q + q  # keeps dF/dq away from zero near most bases
    F = G - Num(evaluate(G, {"x": x0, "p": p0, "q": q0}))
    try:
        base = check_base_point(F, (x0, p0, q0), "q", degenerate_tol=0.5)
    except Degenerate:
        assume(False)
    exact = implicit_jet(F, base, (2, 1))
    approx = finite_difference_jet(F, base, (2, 1), h=1e-3)
    for idx, v in exact.table.items():
        assert approx[idx] == pytest.approx(v, rel=1e-4, abs=1e-4)


@pytest.mark.parametrize(
    "F, T0, mode, orders, indep",
    [
        (parse("2*p - q"), (0.0, 1.0, 2.0), "q", (1, 1), None),
        (CIRCLE, CIRCLE_T0, "p", (1, 2), None),
        (BERNOULLI, BERNOULLI_T0, "q", (3, 1), None),
        (bubble(0.1), (0.0, 0.1, 0.0), "p", (1, 2), "t"),
    ],
    ids=["linear", "circle", "bernoulli", "bubble"],
)
def test_continuation_on_worked_bases(F, T0, mode, orders, indep):
    h = 1e-2
    base = check_base_point(F, T0, mode, indep=indep)
    exact = implicit_jet(F, base, orders)
    approx = finite_difference_jet(F, base, orders, h)
    for idx, v in exact.table.items():
        assert abs(approx[idx] - v) <= 10 * h * h * max(1.0, abs(v))
