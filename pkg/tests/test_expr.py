import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmla import expr as E
from gmla.cones import Cone, ConeError, cone_cutoff
from gmla.parser import ExprError, parse_signal, parse_symbol, pretty

SYMBOL_TEXTS = [
    "x", "xi", "x^2+xi^2", "bracket(2)", "bracket(-1.5)*x", "gaussz", "norm(3)",
    "x*xi+-0.5*i", "3*bracket(1)+gaussz*x^4", "rstep(0,2,1,1)", "astep(0,0.5,-1,0.4,1)",
    "coneCutoff(-1,1,2,0.3,1)",
]
SIGNAL_TEXTS = ["gauss(1,-2)", "chirp(2)", "planewave(5)", "deltaApprox(0.1)", "delta",
                "hermite(4)", "2*gauss(0,0)+hermite(1)", "gauss(0,0)*chirp(0.5)"]


def _close_on_samples(a, b):
    x = np.linspace(-7.3, 9.1, 23)
    xi = np.linspace(-8.2, 6.7, 23)[::-1]
    return np.allclose(E.evaluate(a, x, xi), E.evaluate(b, x, xi), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("text", SYMBOL_TEXTS)
def test_symbol_round_trip(text):
    sym = parse_symbol(text)
    again = parse_symbol(pretty(sym))
    assert _close_on_samples(sym.expr, again.expr)
    assert again.order == sym.order


@pytest.mark.parametrize("text", SIGNAL_TEXTS)
def test_signal_round_trip(text):
    node = parse_signal(text)
    assert E.to_text(parse_signal(E.to_text(node))) == E.to_text(node)


@pytest.mark.parametrize("text,offset", [("x+", 2), ("bracket(2", 9), ("foo(1)", 0), ("x*)", 2), ("x-1", 1)])
def test_parse_error_offsets(text, offset):
    with pytest.raises(ExprError) as err:
        parse_symbol(text)
    assert err.value.offset == offset


def test_signal_primitives_rejected_in_symbols():
    with pytest.raises(ExprError):
        parse_symbol("delta")
    with pytest.raises(ExprError):
        parse_signal("xi")


@pytest.mark.parametrize("text,m", [("x^2+xi^2", 2), ("bracket(-3)", -3), ("gaussz", 0), ("x*xi", 2),
                                    ("norm(2)*bracket(1)", 3), ("coneCutoff(-1,1,2,0.3,1)", 0)])
def test_infer_order(text, m):
    assert parse_symbol(text).order == m


def test_declared_order_overrides():
    assert parse_symbol("x", order=4).order == 4.0


def test_constant_folding():
    assert E.to_text(E.add(E.Const(2.0), E.Const(3.0))) == "5.0"
    assert E.mul(E.ZERO, E.X) == E.ZERO


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2), st.integers(0, 2))
def test_derivatives_match_finite_differences(x, xi, a, b):
    node = parse_symbol("bracket(1.5)*x+xi^3*gaussz+norm(2)").expr
    d = E.diff_multi(node, (a, b))
    h = 1e-3
    f = lambda u, v: E.evaluate(E.diff_multi(node, (a, b - 1) if b else (a - 1, 0)), u, v)
    if a + b == 0:
        return
    if b:
        fd = (f(x, xi + h) - f(x, xi - h)) / (2 * h)
    else:
        fd = (f(x + h, xi) - f(x - h, xi)) / (2 * h)
    assert np.isclose(E.evaluate(d, x, xi), fd, rtol=1e-5, atol=1e-5)


def test_polynomial_conversion():
    p = E.as_polynomial(parse_symbol("x^2+2*x*xi+xi^2").expr)
    want = np.zeros((3, 3))
    want[2, 0], want[1, 1], want[0, 2] = 1, 2, 1
    assert np.allclose(p, want)
    assert E.polynomial_degree(p) == 2
    assert _close_on_samples(E.polynomial_to_node(p), parse_symbol("x^2+2*x*xi+xi^2").expr)
    assert E.as_polynomial(parse_symbol("bracket(1)").expr) is None
    assert E.as_polynomial(parse_symbol("bracket(2)").expr)[0, 0] == 1


# --- cones ---------------------------------------------------------------------------------


def test_cone_validation():
    with pytest.raises(ConeError):
        Cone(1.0, 0.5)
    with pytest.raises(ConeError):
        Cone(0.0, 7.0)
    with pytest.raises(ConeError):
        cone_cutoff(Cone(-0.5, 0.5), 1.0, 0.6, 1.0)


def test_cone_contains_wraps():
    c = Cone.from_degrees(170, 190)
    assert c.contains_angle(np.pi) and c.contains_angle(-np.pi + 0.1)
    assert not c.contains_angle(0.0)


def test_cone_cutoff_values():
    c = Cone(-0.6, 0.6)
    chi = cone_cutoff(c, 2.0, 0.3, 1.0)
    r = np.array([10.0, 10.0, 1.0, 10.0])
    th = np.array([0.0, 0.5, 0.0, 2.0])
    v = E.evaluate(chi, r * np.cos(th), r * np.sin(th)).real
    assert np.allclose(v, [1.0, v[1], 0.0, 0.0])
    assert 0 < v[1] < 1


@given(st.floats(3.5, 40), st.floats(-np.pi, np.pi), st.sampled_from([(0, 1), (1, 0), (1, 1), (0, 2), (2, 0)]))
def test_cone_cutoff_derivatives(r, th, alpha):
    chi = cone_cutoff(Cone(-0.7, 0.9), 2.0, 0.4, 1.0)
    x, xi = r * np.cos(th), r * np.sin(th)
    d = E.evaluate(E.diff_multi(chi, alpha), x, xi)
    lower = (alpha[0] - 1, alpha[1]) if alpha[0] else (0, alpha[1] - 1)
    g = E.diff_multi(chi, lower)
    h = 1e-4
    if alpha[0]:
        fd = (E.evaluate(g, x + h, xi) - E.evaluate(g, x - h, xi)) / (2 * h)
    else:
        fd = (E.evaluate(g, x, xi + h) - E.evaluate(g, x, xi - h)) / (2 * h)
    assert abs(d - fd) <= 1e-5 * max(1.0, abs(d))


@given(st.floats(4, 30), st.floats(1.1, 5), st.floats(-np.pi, np.pi))
def test_cone_cutoff_scale_invariant_outside_ramp(r, t, th):
    chi = cone_cutoff(Cone(-1.0, 1.2), 2.0, 0.5, 1.0)
    a = E.evaluate(chi, r * np.cos(th), r * np.sin(th))
    b = E.evaluate(chi, t * r * np.cos(th), t * r * np.sin(th))
    assert np.isclose(a, b, atol=1e-12)


# --- smooth step -----------------------------------------------------------------------------


def test_step_values():
    from gmla.smoothstep import step_jet

    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert np.allclose(step_jet(t, 0)[0], [0, 0, 0.5, 1, 1])
    assert step_jet(0.25, 2).shape == (3,)


@given(st.floats(0.01, 0.99), st.integers(1, 4))
def test_step_derivatives(t, k):
    from gmla.smoothstep import step_derivative

    h = 1e-5
    fd = (step_derivative(t + h, k - 1) - step_derivative(t - h, k - 1)) / (2 * h)
    d = step_derivative(t, k)
    assert abs(d - fd) <= 1e-4 * max(1.0, abs(d))
