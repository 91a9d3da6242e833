import numpy as np
import pytest

from src.utils.errors import DomainError
from src.utils.numerics import (
    composite_gauss_legendre,
    extrapolate_to_zero,
    fd_derivative,
    gauss_legendre,
    graded_breakpoints,
    hermite_functions,
    loglog_slope,
    periodic_trapezoid,
    trim,
)


class TestQuadrature:
    def test_gauss_legendre_polynomial_exactness(self):
        x, w = gauss_legendre(-1.0, 3.0, 5)
        assert np.sum(w * x ** 9) == pytest.approx((3.0 ** 10 - 1.0) / 10.0, rel=1e-13)

    def test_composite_rule(self):
        x, w = composite_gauss_legendre([0.0, 0.5, 2.0, np.pi], 8)
        assert np.sum(w * np.sin(x)) == pytest.approx(2.0, rel=1e-13)

    def test_composite_rejects_unordered(self):
        with pytest.raises(DomainError):
            composite_gauss_legendre([0.0, 1.0, 0.5], 4)

    def test_graded_breakpoints(self):
        left = graded_breakpoints(0.0, 1.0, 0.5, 3)
        assert np.allclose(left, [0.0, 0.125, 0.25, 0.5, 1.0])
        right = graded_breakpoints(0.0, 1.0, 0.5, 3, toward="b")
        assert np.allclose(right, [0.0, 0.5, 0.75, 0.875, 1.0])
        with pytest.raises(DomainError):
            graded_breakpoints(0.0, 1.0, 1.5, 3)

    def test_periodic_trapezoid(self):
        x, w = periodic_trapezoid(16)
        assert np.sum(w * np.cos(x) ** 2) == pytest.approx(np.pi, rel=1e-14)


class TestFiniteDifferences:
    @pytest.mark.parametrize("order", [2, 4])
    def test_second_derivative_of_sine(self, order):
        h = 0.01
        x = np.arange(0.0, 1.0, h)
        second = fd_derivative(np.sin(x), h, order=order, deriv=2)
        interior = x[order // 2:-(order // 2)]
        assert np.max(np.abs(second + np.sin(interior))) <= (1e-4 if order == 2 else 1e-8)

    def test_axis(self):
        x = np.linspace(0.0, 1.0, 41)
        grid = np.outer(np.ones(3), x ** 2)
        first = fd_derivative(grid, x[1] - x[0], axis=1)
        assert first.shape == (3, 37)
        assert np.allclose(first, 2 * x[2:-2])

    def test_errors(self):
        with pytest.raises(DomainError):
            fd_derivative(np.ones(10), 0.1, order=6)
        with pytest.raises(DomainError):
            fd_derivative(np.ones(3), 0.1, order=4)

    def test_trim(self):
        values = np.arange(36).reshape(6, 6)
        assert trim(values, 2).shape == (2, 2)
        assert trim(values, 0) is values


class TestExtrapolation:
    def test_polynomial_exact(self):
        steps = np.array([0.4, 0.2, 0.1])
        value, error = extrapolate_to_zero(steps, 3.0 + 2.0 * steps - 5.0 * steps ** 2)
        assert value == pytest.approx(3.0, rel=1e-12)
        # linear fit through the two finest samples lands at 3.1
        assert error == pytest.approx(0.1, rel=1e-10)

    def test_complex_samples(self):
        steps = np.array([0.1, 0.05, 0.025])
        value, _ = extrapolate_to_zero(steps, (1 + 2j) + (3 - 1j) * steps)
        assert value == pytest.approx(1 + 2j, rel=1e-12)

    def test_invalid(self):
        with pytest.raises(DomainError):
            extrapolate_to_zero([0.1, 0.2], [1.0])
        with pytest.raises(DomainError):
            extrapolate_to_zero([], [])

    def test_loglog_slope(self):
        x = np.array([0.1, 0.05, 0.025])
        assert loglog_slope(x, 7.0 * x ** 2) == pytest.approx(2.0, rel=1e-10)
        with pytest.raises(DomainError):
            loglog_slope(x, np.array([1.0, 0.0, 1.0]))


class TestHermiteFunctions:
    def test_orthonormal(self):
        x, w = gauss_legendre(-15.0, 15.0, 200)
        h = hermite_functions(6, x)
        gram = (h * w) @ h.T
        assert np.allclose(gram, np.eye(7), atol=1e-12)
