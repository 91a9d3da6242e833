"""
Semiclassical states ψ_{L_m} and their diagnostics.

Each branch is √(i/2) P^{-1/2} times its phase, so for m = 0 at q = 0 both
branches equal √(i/2) e^{iπ/4}, not √(i/2) and √(i/2) e^{iπ/2}; their sum is
√2 √(i/2)(1 + i). The relative phase between the branches stays exactly
e^{iπ/2}. Since ψ_{L_m}(q; ħ) = ħ^{-1/4} F_m(q/√ħ), the fixed-level residual
‖(Ĥ - ħ(m+½))ψ‖/‖ψ‖ is exactly linear in ħ (slope 1); slope 2 appears only
at fixed energy.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from src.data.states import SchrodingerState, hermite_state
from src.models.energy import BohrSommerfeldState, energy_level
from src.models.pairing import SQRT_I_OVER_2, BKSPairing
from src.utils.errors import ConfigError, DomainError
from src.utils.numerics import fd_derivative, gauss_legendre, loglog_slope, stencil_width

logger = logging.getLogger(__name__)

# Relative phase picked up by the branch below the q axis.
MASLOV_FACTOR = 1j


@dataclass(frozen=True)
class SemiclassicalState:
    """
    Semiclassical state ψ_{L_m} = ψ⁺ + ψ⁻ attached to the cycle q² + p² = ħ(2m+1).

    The branches live over p > 0 and p < 0. Each is the WKB amplitude
    P^{-1/2} times the phase e^{-iqp/2ħ} e^{i(m+½)θ}, with θ the angle of
    (q, ±P) on the circle; the lower branch also carries MASLOV_FACTOR.
    Samples vanish outside the open interval |q| < caustic_q.
    """

    m: int
    hbar: float = 1.0
    global_phase: complex = 1.0

    def __post_init__(self):
        BohrSommerfeldState(self.m, self.hbar)

    @property
    def caustic_q(self):
        return BohrSommerfeldState(self.m, self.hbar).radius

    @property
    def energy(self):
        return energy_level(self.m, self.hbar)

    def _momentum(self, q):
        q = np.asarray(q, dtype=float)
        inside = np.abs(q) < self.caustic_q
        momentum = np.sqrt(np.where(inside, self.caustic_q ** 2 - q * q, 1.0))
        return q, inside, momentum

    def wkb_phase(self, q, sign):
        """√(i/2) P^{-1/2} e^{-iqp/2ħ} e^{i(m+½)θ} on the branch p = sign·P"""
        q, inside, momentum = self._momentum(q)
        p = sign * momentum
        theta = np.arctan2(p, q)
        value = SQRT_I_OVER_2 * momentum ** -0.5 * np.exp(
            -0.5j * q * p / self.hbar + 1j * (self.m + 0.5) * theta)
        return np.where(inside, value, 0.0)

    def branch_plus(self, q):
        return self.global_phase * self.wkb_phase(q, 1.0)

    def branch_minus(self, q):
        return self.global_phase * MASLOV_FACTOR * self.wkb_phase(q, -1.0)

    def total(self, q):
        return self.branch_plus(q) + self.branch_minus(q)

    def with_phase(self, phase):
        return replace(self, global_phase=self.global_phase * phase)

    def sample(self, config):
        """ψ_{L_m} on the configured q grid"""
        if config.hbar != self.hbar:
            raise ConfigError(f"state built for hbar={self.hbar}, config has hbar={config.hbar}")
        q = config.q_grid.points
        return SchrodingerState(q, self.total(q), self.hbar, f"psi_L(m={self.m})", self.total)


def psi_lagrangian(m, hbar=1.0):
    """Semiclassical state of the Bohr-Sommerfeld cycle of level m."""
    return SemiclassicalState(m, hbar)


def maslov_phase_profile(state, q):
    """
    Relative phase of the two branches with their WKB phases divided out.

    Args:
        state (SemiclassicalState): ψ_{L_m}
        q (array-like): Points with |q| < caustic_q

    Returns:
        numpy.ndarray: Phase in (-π, π]
    """
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(q) >= state.caustic_q):
        raise DomainError("the relative phase is defined inside the classically allowed region")
    plus = state.branch_plus(q) / state.wkb_phase(q, 1.0)
    minus = state.branch_minus(q) / state.wkb_phase(q, -1.0)
    return np.angle(minus / plus)


def maslov_phase(state, q=0.0):
    """Relative (Maslov) phase between the branches of ``state`` at q."""
    return float(maslov_phase_profile(state, np.atleast_1d(q))[0])


def exact_eigenstate(m, config):
    """Normalized m-th oscillator eigenfunction on the configured grid."""
    return hermite_state(m, config)


def classical_action(q, m, hbar=1.0):
    """S(q) = ∫_{-a}^{q} √(a² - x²) dx on the cycle of level m."""
    energy = energy_level(m, hbar)
    a = np.sqrt(2.0 * energy)
    q = np.clip(np.asarray(q, dtype=float), -a, a)
    return 0.5 * q * np.sqrt(a * a - q * q) + energy * np.arcsin(q / a) + 0.5 * np.pi * energy


def wkb_reference(m, config):
    """
    Standard WKB state P^{-1/2} cos(S/ħ - π/4) inside the allowed region.

    Returns:
        SchrodingerState
    """
    hbar = config.hbar
    a = BohrSommerfeldState(m, hbar).radius

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < a
        momentum = np.sqrt(np.where(inside, a * a - x * x, 1.0))
        value = momentum ** -0.5 * np.cos(classical_action(x, m, hbar) / hbar - 0.25 * np.pi)
        return np.where(inside, value, 0.0) + 0j

    q = config.q_grid.points
    return SchrodingerState(q, evaluate(q), hbar, f"wkb(m={m})", evaluate)


def wkb_proportionality(m, hbar=1.0, fraction=0.9, n=401, node_guard=0.1):
    """
    Constant c with ψ_{L_m} = c·wkb_reference and its spread over the interior.

    Points where |cos(S/ħ - π/4)| < node_guard are skipped.

    Returns:
        tuple: (c, max |ratio - c| / |c|)
    """
    state = psi_lagrangian(m, hbar)
    q = np.linspace(-fraction, fraction, n) * state.caustic_q
    momentum = np.sqrt(state.caustic_q ** 2 - q * q)
    wave = np.cos(classical_action(q, m, hbar) / hbar - 0.25 * np.pi)
    keep = np.abs(wave) >= node_guard
    ratio = state.total(q[keep]) / (momentum[keep] ** -0.5 * wave[keep])
    constant = complex(np.mean(ratio))
    spread = float(np.max(np.abs(ratio - constant)) / abs(constant))
    return constant, spread


def count_nodes(values):
    """Sign changes of the real profile, exact zeros skipped."""
    values = np.real(np.asarray(values))
    signs = np.sign(values[values != 0])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def lagrangian_norm(m, hbar=1.0, n=200):
    """
    L² norm of ψ_{L_m} through q = a sin φ, which removes the caustic blow-up.

    Args:
        m (int): Level
        hbar (float): Planck constant
        n (int): Gauss-Legendre nodes in φ
    """
    state = psi_lagrangian(m, hbar)
    a = state.caustic_q
    phi, w = gauss_legendre(-0.5 * np.pi, 0.5 * np.pi, n)
    q = a * np.sin(phi)
    density = np.abs(state.total(q)) ** 2 * a * np.cos(phi)
    return float(np.sqrt(np.sum(w * density)))


def overlap(m, config, n=200):
    """
    |⟨exact_eigenstate(m), ψ_{L_m}⟩| / (‖exact‖ ‖ψ_{L_m}‖).

    The inner product is the limit pairing of the eigenfunction with the
    cycle, evaluated as a circle integral.
    """
    exact = exact_eigenstate(m, config)
    inner = BKSPairing(config).closed_form(exact, m)
    return float(abs(inner) / lagrangian_norm(m, config.hbar, n))


@dataclass
class ResidualReport:
    table: pd.DataFrame
    slope: float


def _relative_residual(m, hbar, q, fd_order):
    """‖(Ĥ - E)ψ_{L_m}‖/‖ψ_{L_m}‖ on the interior of the uniform grid q."""
    state = psi_lagrangian(m, hbar)
    values = state.total(q)
    width = stencil_width(fd_order)
    second = fd_derivative(values, q[1] - q[0], order=fd_order, deriv=2)
    inner_q = q[width:-width]
    inner = values[width:-width]
    applied = -0.5 * hbar * hbar * second + (0.5 * inner_q ** 2 - state.energy) * inner
    return float(np.sqrt(trapezoid(np.abs(applied) ** 2, inner_q) / trapezoid(np.abs(inner) ** 2, inner_q)))


def residual_diagnostics(m, hbar_list, exclusion=0.2, config=None, points=2001, fd_order=4):
    """
    Eigen-equation residual of ψ_{L_m} at fixed level across ħ.

    The window |q| ≤ (1 - exclusion)·caustic is sampled on a grid that
    scales with √ħ, so the residual is compared at equal resolution.

    Args:
        m (int): Level
        hbar_list (sequence): Values of ħ
        exclusion (float): Fraction of the caustic radius cut at each end
        config (QuantConfig, optional): If given, the overlap with the
            exact eigenstate is reported (using its grids with each ħ)
        points (int): Samples in the window
        fd_order (int): Stencil order of ∂²

    Returns:
        ResidualReport: table with columns hbar, residual (and overlap),
        slope of log residual against log ħ
    """
    if not 0.0 < exclusion < 1.0:
        raise ConfigError(f"exclusion must lie in (0, 1), got {exclusion}")
    if len(hbar_list) < 2:
        raise ConfigError("residual scan needs at least two values of hbar")
    width = stencil_width(fd_order)
    half = (1.0 - exclusion) * np.sqrt(2.0 * m + 1.0)
    x = np.linspace(-half, half, points)
    step = x[1] - x[0]
    x = np.concatenate([x[0] - step * np.arange(width, 0, -1), x, x[-1] + step * np.arange(1, width + 1)])

    rows = []
    for hbar in hbar_list:
        row = {"hbar": float(hbar), "residual": _relative_residual(m, hbar, np.sqrt(hbar) * x, fd_order)}
        if config is not None:
            row["overlap"] = overlap(m, config.replace(hbar=float(hbar)))
        rows.append(row)
        logger.info("m=%d hbar=%g residual=%.3e", m, hbar, row["residual"])

    table = pd.DataFrame(rows)
    slope = loglog_slope(table["hbar"].to_numpy(), table["residual"].to_numpy())
    return ResidualReport(table, slope)


def residual_diagnostics_fixed_energy(energy, hbar_list, exclusion=0.2, points_per_hbar=20, fd_order=4):
    """
    Eigen-equation residual along ħ → 0 at a fixed quantized energy.

    Each ħ must put ``energy`` on a level: energy/ħ - ½ an integer. The
    window |q| ≤ (1 - exclusion)·√(2·energy) is sampled with spacing
    ħ/points_per_hbar.

    Returns:
        ResidualReport: columns hbar, m, residual; slope against ħ
    """
    if not 0.0 < exclusion < 1.0:
        raise ConfigError(f"exclusion must lie in (0, 1), got {exclusion}")
    half = (1.0 - exclusion) * np.sqrt(2.0 * energy)
    width = stencil_width(fd_order)
    rows = []
    for hbar in hbar_list:
        level = energy / hbar - 0.5
        m = int(round(level))
        if m < 0 or abs(level - m) > 1e-9:
            raise ConfigError(f"energy {energy} is not a level for hbar={hbar}")
        step = hbar / points_per_hbar
        count = int(np.ceil(half / step))
        q = step * np.arange(-count - width, count + width + 1)
        rows.append({"hbar": float(hbar), "m": m, "residual": _relative_residual(m, hbar, q, fd_order)})
        logger.info("E=%g hbar=%g (m=%d) residual=%.3e", energy, hbar, m, rows[-1]["residual"])

    table = pd.DataFrame(rows)
    slope = loglog_slope(table["hbar"].to_numpy(), table["residual"].to_numpy())
    return ResidualReport(table, slope)
