import numpy as np
import pytest

from src.models.kahler import (
    FirstTypeFamily,
    LegendreSolver,
    SecondTypeFamily,
    du_form_components,
    legendre,
    symplectic_potential,
    u_coord,
    w_coord,
    z_coord,
)
from src.models.phase_space import ActionAngle, PhasePoint
from src.utils.errors import ConvergenceError, DomainError


class TestFirstTypeFamily:
    @pytest.mark.parametrize("q, p, t1, expected", [
        (1.0, 2.0, 0.0, 1.0),
        (1.0, 2.0, 1.0, 1.0 + 2.0j),
        (0.0, 3.0, 0.5, 1.5j),
    ])
    def test_z_coordinate(self, q, p, t1, expected):
        """z = q + i t1 p"""
        assert z_coord(PhasePoint(q, p), FirstTypeFamily(t1)) == pytest.approx(expected)

    def test_negative_time_rejected(self):
        """Flow times are nonnegative"""
        with pytest.raises(DomainError):
            FirstTypeFamily(-0.1)


class TestSecondTypeFamily:
    @pytest.mark.parametrize("h, t2, expected", [(1.0, 0.0, -0.5), (1.0, 2.0, 0.5)])
    def test_symplectic_potential(self, h, t2, expected):
        """g(h) = h log h/2 - h/2 + t2 h²/2"""
        assert symplectic_potential(h, SecondTypeFamily(t2)) == pytest.approx(expected)

    def test_potential_needs_positive_action(self):
        """g is defined for h > 0 only"""
        with pytest.raises(DomainError):
            symplectic_potential(0.0, SecondTypeFamily(1.0))

    def test_derivatives_consistent(self):
        """g' and g'' match central differences"""
        fam = SecondTypeFamily(0.7)
        h, d = 1.3, 1e-5
        assert fam.g_prime(h) == pytest.approx((fam.g(h + d) - fam.g(h - d)) / (2 * d), rel=1e-8)
        assert fam.g_second(h) == pytest.approx((fam.g_prime(h + d) - fam.g_prime(h - d)) / (2 * d), rel=1e-8)

    @pytest.mark.parametrize("t2", [0.0, 0.5, 10.0, 1e3])
    def test_strict_convexity(self, t2):
        """g'' > 0 and g' increasing over seven decades of action"""
        fam = SecondTypeFamily(t2)
        h = np.logspace(-6.0, 1.0, 1000)
        assert np.all(fam.g_second(h) > 0)
        assert np.all(np.diff(fam.g_prime(h)) > 0)

    def test_beta(self):
        """β(t) = 1/t"""
        assert SecondTypeFamily(4.0).beta() == 0.25


class TestLegendre:
    @pytest.mark.parametrize("v, h, k", [(0.0, 1.0, 0.5), (0.5, np.e, 0.5 * np.e)])
    def test_free_case_closed_form(self, v, h, k):
        """At t2 = 0, h = e^{2v} and k = h/2"""
        data = legendre(v, SecondTypeFamily(0.0))
        assert data.h_of_v == pytest.approx(h, rel=1e-14)
        assert data.k == pytest.approx(k, rel=1e-14)

    def test_regularized_case(self):
        """t2 = 1, v = 1.5: ½ log h + h = 1.5 and k = (h² + h)/2"""
        data = legendre(1.5, SecondTypeFamily(1.0))
        h = data.h_of_v
        assert 0.5 * np.log(h) + h == pytest.approx(1.5, abs=1e-13)
        assert data.k == pytest.approx(0.5 * (h * h + h), rel=1e-12)

    def test_inverse_of_gradient(self, rng):
        """g'(h(v)) = v over a range of actions and times"""
        for t2 in (0.5, 10.0, 1e3):
            fam = SecondTypeFamily(t2)
            for h in np.exp(rng.uniform(-6.0, 3.0, size=20)):
                data = legendre(fam.g_prime(h), fam)
                assert data.h_of_v == pytest.approx(h, rel=1e-11)

    @pytest.mark.parametrize("t2", [0.0, 1.0, 10.0, 1e3])
    def test_potential_derivative_is_action(self, t2):
        """dk/dv = h(v) by central differences"""
        fam = SecondTypeFamily(t2)
        d = 1e-4
        for h in (0.05, 0.5, 2.0):
            v = float(fam.g_prime(h))
            slope = (legendre(v + d, fam).k - legendre(v - d, fam).k) / (2.0 * d)
            assert slope == pytest.approx(legendre(v, fam).h_of_v, rel=1e-7)

    def test_iteration_cap(self):
        """An exhausted iteration budget raises with diagnostics"""
        solver = LegendreSolver({"max_iter": 1, "tol": 0.0})
        with pytest.raises(ConvergenceError) as info:
            solver.solve(3.0, SecondTypeFamily(2.0))
        assert info.value.diagnostics["t2"] == 2.0


class TestToricCoordinates:
    @pytest.mark.parametrize("h, theta, t2, expected", [
        (0.5, 0.0, 0.0, 1.0),
        (0.5, 0.5 * np.pi, 0.0, 1j),
        (2.0, 0.0, 1.0, 2.0 * np.e ** 2),
    ])
    def test_w_coordinate(self, h, theta, t2, expected):
        """w = √(2h) e^{t2 h} e^{iθ}"""
        assert w_coord(ActionAngle(h, theta), SecondTypeFamily(t2)) == pytest.approx(expected)

    def test_u_is_log_of_w(self, rng):
        """w = √2 e^u"""
        for h, theta, t2 in zip(rng.uniform(0.1, 3.0, 20), rng.uniform(0, 2 * np.pi, 20), rng.uniform(0, 2, 20)):
            aa, fam = ActionAngle(h, theta), SecondTypeFamily(t2)
            assert np.sqrt(2.0) * np.exp(u_coord(aa, fam)) == pytest.approx(w_coord(aa, fam))

    @pytest.mark.parametrize("h, t2, expected", [(0.5, 0.0, 1.0), (1.0, 3.0, 3.5)])
    def test_du_components(self, h, t2, expected):
        """du = (1/(2h) + t2) dh + i dθ"""
        dh, dtheta = du_form_components(ActionAngle(h, 0.0), SecondTypeFamily(t2))
        assert dh == pytest.approx(expected)
        assert dtheta == 1j

    def test_coordinates_need_positive_action(self):
        """w, u and du are undefined at h = 0"""
        aa, fam = ActionAngle(0.0, 0.0), SecondTypeFamily(1.0)
        for fn in (w_coord, u_coord, du_form_components):
            with pytest.raises(DomainError):
                fn(aa, fam)
