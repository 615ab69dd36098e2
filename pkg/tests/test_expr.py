"""Expression DAGs: values, exact derivatives and domain errors."""

import math

import numpy as np
import pytest

from graphipm.errors import DomainError
from graphipm.expr import (
    DerivativeWorkspace,
    cos,
    evaluate,
    exp,
    gradient,
    hessian,
    log,
    quicksum,
    signed_square,
    sin,
    sqrt,
    square,
    topological_order,
    var,
)


def dense_hessian(expr, point, n):
    h = hessian(expr, point)
    H = np.zeros((n, n))
    for r, c, v in zip(h.rows, h.cols, h.values):
        H[r, c] += v
        if r != c:
            H[c, r] += v
    return H


def fd_gradient(expr, point, eps=1e-6):
    point = np.asarray(point, dtype=float)
    g = np.zeros_like(point)
    for i in range(len(point)):
        e = np.zeros_like(point)
        e[i] = eps
        g[i] = (evaluate(expr, point + e) - evaluate(expr, point - e)) / (2 * eps)
    return g


def fd_hessian(expr, point, eps=1e-6):
    """Central differences of the exact gradient."""
    point = np.asarray(point, dtype=float)
    n = len(point)
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = eps
        H[:, i] = (full_gradient(expr, point + e, n) - full_gradient(expr, point - e, n)) / (2 * eps)
    return 0.5 * (H + H.T)


def full_gradient(expr, point, n):
    g = gradient(expr, point)
    out = np.zeros(n)
    out[g.indices] = g.values
    return out


x, y, z = var(0), var(1), var(2)

EXPRESSIONS = {
    "polynomial": x * x * y + 3.0 * y ** 3 - z,
    "transcendental": exp(x) * sin(y) + log(z) * cos(x),
    "quotient": (x + 2.0 * y) / (z + 1.0),
    "sqrt": sqrt(x * x + y * y + 1.0) - 2.0 * z,
    "signed_square": signed_square(x - y) + 0.5 * square(z),
    "compressor": y * (exp(0.2857 * log(z)) - 1.0),
    "trig_flow": x * y * cos(z - x) + x * y * sin(z - x),
}


class TestValues:

    def test_product_value(self):
        assert evaluate(x * y, [3.0, 4.0]) == 12.0

    def test_constant_expression(self):
        expr = square(x) - square(x) + 5.0
        assert evaluate(expr, [7.0]) == 5.0

    def test_signed_square_is_odd(self):
        assert evaluate(signed_square(x), [-3.0]) == -9.0
        assert evaluate(signed_square(x), [3.0]) == 9.0

    def test_quicksum_empty_is_zero(self):
        assert evaluate(quicksum([]), [0.0]) == 0.0

    def test_shared_subexpression_stays_shared(self):
        s = x + y
        expr = s * s
        nodes = topological_order(expr)
        assert sum(1 for node in nodes if node is s) == 1
        assert evaluate(expr, [1.0, 2.0]) == 9.0

    def test_variables_sorted(self):
        assert (z * x + y).variables() == [0, 1, 2]


class TestDerivatives:

    @pytest.mark.parametrize("name", sorted(EXPRESSIONS))
    def test_gradient_matches_finite_differences(self, name, rng):
        expr = EXPRESSIONS[name]
        for _ in range(10):
            point = rng.uniform(0.3, 1.7, size=3)
            g = full_gradient(expr, point, 3)
            np.testing.assert_allclose(g, fd_gradient(expr, point), rtol=1e-6, atol=1e-5)

    @pytest.mark.parametrize("name", sorted(EXPRESSIONS))
    def test_hessian_matches_finite_differences(self, name, rng):
        expr = EXPRESSIONS[name]
        for _ in range(10):
            point = rng.uniform(0.3, 1.7, size=3)
            H = dense_hessian(expr, point, 3)
            np.testing.assert_allclose(H, fd_hessian(expr, point), rtol=1e-6, atol=1e-5)

    def test_hessian_is_lower_triangle(self):
        h = hessian(EXPRESSIONS["transcendental"], [0.5, 0.5, 0.5])
        assert np.all(h.rows >= h.cols)

    def test_linear_expression_has_empty_hessian(self):
        h = hessian(2.0 * x - y + 3.0, [1.0, 1.0])
        assert len(h.values) == 0

    def test_hessian_scale(self):
        point = [0.7, 1.1, 1.3]
        expr = EXPRESSIONS["polynomial"]
        np.testing.assert_allclose(hessian(expr, point, scale=-2.5).values,
                                   -2.5 * hessian(expr, point).values)

    def test_signed_square_derivatives(self):
        g = gradient(signed_square(x), [-2.0])
        assert g.values[0] == 4.0
        h = hessian(signed_square(x), [-2.0])
        assert h.values[0] == -2.0

    def test_workspace_reuse_gives_same_result(self):
        ws = DerivativeWorkspace()
        expr = EXPRESSIONS["trig_flow"]
        first = gradient(expr, [0.4, 0.9, 1.2], ws).values.copy()
        gradient(EXPRESSIONS["quotient"], [1.0, 1.0, 1.0], ws)
        np.testing.assert_array_equal(gradient(expr, [0.4, 0.9, 1.2], ws).values, first)


class TestDomain:

    def test_log_of_negative(self):
        with pytest.raises(DomainError):
            evaluate(log(x), [-1.0])

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            evaluate(1.0 / x, [0.0])

    def test_sqrt_derivative_at_zero(self):
        assert evaluate(sqrt(x), [0.0]) == 0.0
        with pytest.raises(DomainError):
            gradient(sqrt(x), [0.0])

    def test_overflow(self):
        with pytest.raises(DomainError):
            evaluate(exp(exp(x)), [10.0])

    def test_non_integer_power_rejected(self):
        with pytest.raises(TypeError):
            x ** 0.5

    def test_domain_error_is_arithmetic_error(self):
        assert issubclass(DomainError, ArithmeticError)
        assert math.isfinite(evaluate(exp(x), [1.0]))
