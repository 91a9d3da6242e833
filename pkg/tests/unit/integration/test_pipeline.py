import numpy as np
import pytest

from src.data.grids import QuantConfig
from src.data.states import gaussian_state, hermite_state
from src.models.energy import calibrate_a_m, energy_level, spectrum, uncorrected_spectrum
from src.models.pairing import BKSPairing, PairingSchedule, pairing_map_B
from src.models.semiclassical import maslov_phase, psi_lagrangian


class TestPipeline:
    @pytest.mark.parametrize("k, m", [(k, m) for k in range(3) for m in range(3)])
    def test_pairing_limit_against_circle_integral(self, config, k, m):
        """Hermite states against each level: limit, parity selection, oracle agreement"""
        result = BKSPairing(config).limit(hermite_state(k, config), m)
        if (k + m) % 2:
            assert abs(result.value) <= 1e-6
        else:
            assert abs(result.value - result.oracle) <= 1e-3 * max(abs(result.oracle), 0.1)

    def test_pairing_limit_of_shifted_gaussian(self, gaussian, config):
        result = BKSPairing(config).limit(gaussian, 1)
        assert result.relative_error <= 1e-3

    def test_smaller_hbar(self):
        """The chain runs unchanged at ħ = 1/2"""
        config = QuantConfig({"hbar": 0.5})
        # t2 scaled by 1/ħ keeps the dimensionless schedule
        schedule = PairingSchedule((4e-3, 2e-3, 1e-3), (500.0, 1000.0, 2000.0))
        result = BKSPairing(config).limit(hermite_state(0, config), 0, schedule)
        assert result.relative_error <= 1e-3
        assert calibrate_a_m(0, 0.5) == pytest.approx(calibrate_a_m(0, 1.0), rel=1e-6)

    def test_corrected_spectrum_and_maslov_phase(self):
        """Half-form levels ħ(m+½) go with a quarter-turn branch phase"""
        energies = np.asarray(spectrum(4))
        assert np.allclose(energies - np.asarray(uncorrected_spectrum(4)), 0.5)
        for m, energy in enumerate(energies):
            assert energy == energy_level(m)
            assert maslov_phase(psi_lagrangian(m)) == pytest.approx(0.5 * np.pi, abs=1e-12)

    def test_pairing_map_reproduces_limit_pairing(self, config):
        """⟨ψ, B(state)⟩ from the density matches the circle integral"""
        m = 2
        engine = BKSPairing(config)
        a = psi_lagrangian(m).caustic_q
        state = gaussian_state(config, width=0.6, center=0.4, momentum=0.3)
        # q = a sin φ removes the caustic singularity up to a square root
        phi, weights = np.polynomial.legendre.leggauss(400)
        phi = 0.5 * np.pi * phi
        weights = 0.5 * np.pi * weights
        q = a * np.sin(phi)
        density = pairing_map_B(m, config, q=q).psi_q
        via_density = np.sum(weights * np.conj(state.value_at(q)) * density * a * np.cos(phi))
        assert via_density == pytest.approx(engine.closed_form(state, m), rel=1e-3)

    def test_mollified_and_closed_routes_agree(self, config):
        q = np.array([-0.5, 0.2, 0.9])
        closed = pairing_map_B(1, config, q=q).psi_q
        mollified = pairing_map_B(1, config, route="mollified", q=q).psi_q
        assert np.max(np.abs(mollified - closed)) <= 1e-3 * np.max(np.abs(closed))

    def test_schedule_refinement_reduces_error(self, ground_state, config):
        engine = BKSPairing(config)
        coarse = engine.limit(ground_state, 0, PairingSchedule.diagonal([8e-3, 4e-3, 2e-3]))
        fine = engine.limit(ground_state, 0, PairingSchedule.diagonal([2e-3, 1e-3, 5e-4]))
        assert fine.relative_error <= coarse.relative_error + 1e-8
