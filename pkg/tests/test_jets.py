from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrlab.jets import Jet3, metric_derivatives, seed_point

small = st.floats(-1.5, 1.5, allow_nan=False)


def _x(value: float) -> Jet3:
    return Jet3.variable(value, [1.0])


def test_polynomial_derivatives_exact() -> None:
    # f = x^3 + 2x at x = 1.5
    f = _x(1.5) ** 3 + 2 * _x(1.5)
    assert f.value == pytest.approx(1.5**3 + 3.0)
    assert f.d1[0] == pytest.approx(3 * 1.5**2 + 2)
    assert f.d2[0, 0] == pytest.approx(6 * 1.5)
    assert f.d3[0, 0, 0] == pytest.approx(6.0)


@given(small)
def test_exp_sin_cos(v: float) -> None:
    e = _x(v).exp()
    assert np.allclose([e.d1[0], e.d2[0, 0], e.d3[0, 0, 0]], math.exp(v))
    s = _x(v).sin()
    assert s.d3[0, 0, 0] == pytest.approx(-math.cos(v), abs=1e-14)
    c = _x(v).cos()
    assert c.d2[0, 0] == pytest.approx(-math.cos(v), abs=1e-14)


@given(st.floats(0.2, 4.0))
def test_sqrt_and_reciprocal(v: float) -> None:
    r = _x(v).sqrt()
    assert r.d3[0, 0, 0] == pytest.approx(0.375 * v**-2.5, rel=1e-12)
    inv = 1.0 / _x(v)
    assert inv.d3[0, 0, 0] == pytest.approx(-6.0 / v**4, rel=1e-12)
    frac = _x(v) ** 1.5
    assert frac.d2[0, 0] == pytest.approx(0.75 * v**-0.5, rel=1e-12)


def test_singular_operations_raise() -> None:
    with pytest.raises(ZeroDivisionError):
        1.0 / _x(0.0)
    with pytest.raises(ValueError):
        _x(-1.0).sqrt()
    with pytest.raises(ValueError):
        _x(0.0) ** 0.5


@settings(max_examples=40)
@given(small, small)
def test_mixed_partials_match_finite_differences(a: float, b: float) -> None:
    def f(x, y):
        return (x * y).sin() * (x + 2.0).exp() if isinstance(x, Jet3) else math.sin(x * y) * math.exp(x + 2.0)

    x, y = seed_point([a, b], [0, 1])
    jet = f(x, y)
    h = 1e-4
    fd = (f(a + h, b + h) - f(a + h, b - h) - f(a - h, b + h) + f(a - h, b - h)) / (4 * h * h)
    assert jet.d2[0, 1] == pytest.approx(fd, rel=1e-5, abs=1e-5)
    assert jet.d2[0, 1] == jet.d2[1, 0]


@given(small, small)
def test_product_rule_symmetry(a: float, b: float) -> None:
    x, y = seed_point([a, b], [0, 1, 1])
    prod = x * y * y
    # d/dx d/dy d/dy (x y^2) = 2
    assert prod.d3[0, 1, 2] == pytest.approx(2.0)
    assert np.allclose(prod.d3, np.transpose(prod.d3, (1, 0, 2)))


def _metric(u):
    x, y = u
    return [[1.0 + x * x, x * y], [x * y, (y.exp() if isinstance(y, Jet3) else math.exp(y))]]


def test_metric_derivatives_against_closed_form() -> None:
    g, dg, d2g, d3g = metric_derivatives(_metric, [0.3, -0.2], order=3)
    assert np.allclose(g, [[1.09, -0.06], [-0.06, math.exp(-0.2)]])
    assert dg[0, 0, 0] == pytest.approx(0.6)
    assert dg[1, 0, 1] == pytest.approx(0.3)
    assert d2g[0, 1, 0, 1] == pytest.approx(1.0)
    assert d2g[1, 1, 1, 1] == pytest.approx(math.exp(-0.2))
    assert d3g[1, 1, 1, 1, 1] == pytest.approx(math.exp(-0.2))
    assert d3g[0, 0, 1, 0, 0] == 0.0


def test_metric_derivatives_order_validation() -> None:
    with pytest.raises(ValueError):
        metric_derivatives(_metric, [0.0, 0.0], order=4)
    out = metric_derivatives(_metric, [0.0, 0.0], order=2)
    assert len(out) == 3 and out[2].shape == (2, 2, 2, 2)
