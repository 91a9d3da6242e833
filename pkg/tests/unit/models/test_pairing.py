import numpy as np
import pytest

from src.data.grids import QuantConfig
from src.data.states import gaussian_state, hermite_state, plane_wave_state
from src.models.pairing import (
    SQRT_I_OVER_2,
    BKSPairing,
    MOLLIFIER_SCHEDULE,
    Extrapolation,
    PairingMesh,
    PairingSchedule,
    closed_form_pairing,
    form_factor,
    halfform_density,
    pairing_map_B,
    regularized_pairing,
    wedge_identity_residual,
)
from src.models.phase_space import PhasePoint, Trivialization, action_angle_arrays
from src.models.semiclassical import psi_lagrangian
from src.utils.errors import ConfigError, ConvergenceError, DomainError


class TestFormFactor:
    @pytest.mark.parametrize("q, p, t1, t2, expected", [
        (0.0, 1.0, 0.0, 0.0, 1.0),
        (1.0, 0.0, 0.0, 0.0, -1j),
        (1.0, 1.0, 1.0, 2.0, 3.0 - 3.0j),
    ])
    def test_values(self, q, p, t1, t2, expected):
        """(p - iq)(1 + t1)/(p² + q²) + t2(p - i t1 q)"""
        assert form_factor(PhasePoint(q, p), t1, t2) == pytest.approx(expected)

    def test_origin_rejected(self):
        with pytest.raises(DomainError):
            form_factor(PhasePoint(0.0, 0.0), 0.1, 1.0)
        with pytest.raises(DomainError):
            wedge_identity_residual(PhasePoint(0.0, 0.0), 0.1, 1.0)

    def test_wedge_identity(self, rng):
        """The wedge of dz with (1/2h + t2)dh - i dθ reproduces the factor"""
        points = rng.normal(scale=2.0, size=(10000, 2))
        t1 = rng.uniform(0.0, 10.0, 10000)
        t2 = rng.uniform(0.0, 1e6, 10000)
        worst = max(wedge_identity_residual(PhasePoint(q, p), a, b) for (q, p), a, b in zip(points, t1, t2))
        assert worst <= 1e-12

    def test_wedge_identity_on_axes_and_large_times(self):
        assert wedge_identity_residual(PhasePoint(0.0, 1.7), 0.3, 5.0) <= 1e-12
        assert wedge_identity_residual(PhasePoint(0.4, -0.9), 0.3, 1e6) <= 1e-10


class TestHalfFormDensity:
    def test_upper_half_plane(self, rng):
        """G = e^{iθ} conj(f) has positive imaginary part"""
        q, p = rng.normal(size=(2, 1000))
        g = halfform_density(q, p, 0.01, 100.0) ** 2
        assert np.all(g.imag > 0)

    def test_large_t2_limit(self):
        """√G/√t2 → √(p e^{iθ}) off the caustics"""
        theta = np.linspace(0.2, 2.0 * np.pi - 0.2, 50)
        theta = theta[np.abs(np.sin(theta)) > 0.2]
        q, p = np.cos(theta), np.sin(theta)
        _, angle = action_angle_arrays(q, p)
        limit = np.sqrt(p * np.exp(1j * angle))
        assert np.allclose(halfform_density(q, p, 0.0, 1e8) / 1e4, limit, rtol=1e-6)


class TestPairingSchedule:
    def test_too_short(self):
        with pytest.raises(ConfigError, match="schedule too short"):
            PairingSchedule((1e-3,), (1e3,))

    def test_monotone(self):
        with pytest.raises(ConfigError):
            PairingSchedule((1e-3, 2e-3, 5e-4), (10.0, 20.0, 40.0))
        with pytest.raises(ConfigError):
            PairingSchedule((4e-3, 2e-3, 1e-3), (40.0, 20.0, 80.0))

    def test_extrapolation_from_string(self):
        schedule = PairingSchedule(extrapolation="last_value")
        assert schedule.extrapolation is Extrapolation.LAST_VALUE
        with pytest.raises(ConfigError):
            PairingSchedule(extrapolation="aitken")

    def test_diagonal(self):
        schedule = PairingSchedule.diagonal([4e-3, 2e-3, 1e-3])
        assert schedule.t2_sequence == pytest.approx((250.0, 500.0, 1000.0))


class TestClosedFormPairing:
    def test_parity_selection(self, config):
        """States of parity opposite to (-1)^m pair to zero"""
        assert abs(closed_form_pairing(hermite_state(1, config), 0, config)) < 1e-15
        assert abs(closed_form_pairing(hermite_state(2, config), 1, config)) < 1e-15

    def test_antilinear(self, gaussian, config):
        """pairing(λψ) = conj(λ) pairing(ψ)"""
        lam = 0.3 - 1.7j
        base = closed_form_pairing(gaussian, 1, config)
        assert closed_form_pairing(gaussian.scaled(lam), 1, config) == pytest.approx(np.conj(lam) * base, rel=1e-10)

    def test_breakpoints_do_not_change_smooth_result(self, gaussian, config):
        engine = BKSPairing(config)
        plain = engine.closed_form(gaussian, 2)
        split = engine.closed_form(gaussian, 2, breakpoints=[0.7, 1.9])
        assert split == pytest.approx(plain, rel=1e-9, abs=1e-12)


class TestRegularizedPairing:
    def test_positive_times_required(self, ground_state, config):
        with pytest.raises(DomainError):
            regularized_pairing(ground_state, 0, 0.0, 100.0, config)

    def test_gauge_invariance(self, gaussian, config):
        """Expressing both sections in σ or in σ̃ gives the same number"""
        engine = BKSPairing(config)
        nodes = engine.mapper.momentum_nodes(gaussian)
        in_sigma = engine.regularized(gaussian, 1, 1e-2, 100.0, Trivialization.SIGMA, nodes)
        in_tilde = engine.regularized(gaussian, 1, 1e-2, 100.0, Trivialization.SIGMA_TILDE, nodes)
        assert abs(in_sigma - in_tilde) <= 1e-12 * abs(in_sigma)

    def test_conjugate_linear_in_state(self, gaussian, config):
        engine = BKSPairing(config)
        lam = 2.0 + 0.5j
        base = engine.regularized(gaussian, 0, 1e-2, 100.0)
        scaled = engine.regularized(gaussian.scaled(lam), 0, 1e-2, 100.0)
        assert scaled == pytest.approx(np.conj(lam) * base, rel=1e-10)

    def test_disjoint_support_vanishes(self, config):
        """A state far outside the cycle does not see it"""
        far = gaussian_state(config, width=0.7, center=6.0)
        assert abs(regularized_pairing(far, 0, 1e-3, 1000.0, config)) <= 1e-6


class TestPairingLimit:
    def test_ground_state(self, ground_state, config):
        """Extrapolated limit matches the circle integral"""
        result = BKSPairing(config).limit(ground_state, 0)
        assert result.relative_error <= 1e-3
        assert result.estimated_error >= 0
        assert len(result.steps) == 3

    def test_plane_wave(self, config):
        """States not decayed at the grid edge still reach the limit"""
        result = BKSPairing(config).limit(plane_wave_state(config, 1.0), 1)
        assert result.relative_error <= 1e-2

    @pytest.mark.parametrize("hbar", [0.1, 0.5])
    def test_small_hbar(self, hbar):
        """With t2 in units of 1/ħ the schedule carries over to any ħ"""
        config = QuantConfig({"hbar": hbar})
        schedule = PairingSchedule((4e-3, 2e-3, 1e-3), tuple(t / hbar for t in (250.0, 500.0, 1000.0)))
        result = BKSPairing(config).limit(hermite_state(0, config), 0, schedule)
        assert result.relative_error <= 1e-3

    def test_first_order_convergence(self, ground_state, config):
        """|R(t1, t2) - limit| ~ t1 + 1/t2"""
        schedule = PairingSchedule.diagonal([8e-3, 4e-3, 2e-3, 1e-3])
        result = BKSPairing(config).limit(ground_state, 0, schedule)
        assert 0.8 <= result.order <= 1.5

    def test_joint_and_iterated_limits_agree(self, ground_state, config):
        engine = BKSPairing(config)
        t1 = (1e-3, 5e-4, 2.5e-4)
        t2 = (1000.0, 2000.0, 4000.0)
        joint = engine.limit(ground_state, 0, PairingSchedule(t1, t2), path="joint")
        iterated = engine.limit(ground_state, 0, PairingSchedule(t1, t2), path="iterated")
        assert abs(joint.value - iterated.value) <= 1e-4 * abs(joint.oracle)
        assert len(iterated.steps) == 9

    def test_last_value_extrapolation(self, ground_state, config):
        engine = BKSPairing(config, {"limit_tol": 1.0})
        result = engine.limit(ground_state, 0, PairingSchedule(extrapolation=Extrapolation.LAST_VALUE))
        assert result.value == result.steps[-1][2]

    def test_unreached_limit_raises(self, ground_state, config):
        engine = BKSPairing(config, {"limit_tol": 1e-12})
        with pytest.raises(ConvergenceError, match="limit not reached"):
            engine.limit(ground_state, 0)

    def test_unknown_path(self, ground_state, config):
        with pytest.raises(ConfigError):
            BKSPairing(config).limit(ground_state, 0, path="spiral")


class TestMollifier:
    def test_focused_rule_integrates_narrow_peak(self):
        """Panels confined near the peaks integrate a narrow Gaussian in θ"""
        centre, spread = 1.1, 0.01
        points, weights = PairingMesh().focused_rule([centre, 2.0 * np.pi - centre], spread, 12.0 * spread)
        assert np.all(np.diff(points) > 0)
        total = np.sum(weights * np.exp(-0.5 * ((points - centre) / spread) ** 2))
        assert total == pytest.approx(spread * np.sqrt(2.0 * np.pi), rel=1e-10)

    def test_overlapping_windows_merge(self):
        points, weights = PairingMesh().focused_rule([1.0, 1.05], 0.01, 0.1)
        assert np.sum(weights) == pytest.approx(0.25, rel=1e-12)
        assert np.all(np.diff(points) > 0)

    def test_schedule_is_finer_than_default(self):
        assert max(MOLLIFIER_SCHEDULE.t1_sequence) < min(PairingSchedule().t1_sequence)

    def test_centre_outside_caustics_rejected(self, config):
        with pytest.raises(DomainError):
            BKSPairing(config).bump_limit(0, 1.2, 0.05)

    def test_bump_limit_matches_circle_integral(self, config):
        """The regularized pairings of a narrow bump converge to its circle integral"""
        result = BKSPairing(config).bump_limit(1, 0.4, 0.1)
        assert result.relative_error <= 2e-3
        assert len(result.steps) == 3


class TestPairingMap:
    def test_value_at_origin(self, config):
        """B(ψ̂_{L_0})(0) = √(i/2) ħ^{-1/4} √2 (1 + i)"""
        for hbar in (1.0, 0.25):
            state = pairing_map_B(0, config.replace(hbar=hbar), q=np.array([0.0]))
            expected = SQRT_I_OVER_2 * hbar ** -0.25 * np.sqrt(2.0) * (1 + 1j)
            assert state.psi_q[0] == pytest.approx(expected, rel=1e-14)

    def test_supported_inside_caustics(self, config):
        state = pairing_map_B(2, config)
        outside = np.abs(state.q) >= np.sqrt(5.0)
        assert np.all(state.psi_q[outside] == 0)
        assert np.all(state.psi_q[~outside] != 0)

    @pytest.mark.parametrize("m", range(4))
    def test_closed_route_is_semiclassical_state(self, config, m):
        lagrangian = psi_lagrangian(m)
        q = np.linspace(-0.8, 0.8, 33) * lagrangian.caustic_q
        density = pairing_map_B(m, config, q=q).psi_q
        expected = lagrangian.total(q)
        assert np.max(np.abs(density - expected)) <= 1e-12 * np.max(np.abs(expected))

    @pytest.mark.parametrize("m", [0, 1, 2])
    def test_mollified_route_agrees(self, config, m):
        """Limit pairings with shrinking Gaussians recover the density"""
        a = psi_lagrangian(m).caustic_q
        q = np.array([-0.5, 0.0, 0.35]) * a
        closed = pairing_map_B(m, config, route="closed", q=q).psi_q
        numeric = pairing_map_B(m, config, route="mollified", q=q).psi_q
        assert np.max(np.abs(numeric - closed)) <= 1e-3 * np.max(np.abs(closed))

    def test_unknown_route(self, config):
        with pytest.raises(ConfigError):
            pairing_map_B(0, config, route="direct")
