import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from src.data.states import SchrodingerState, gaussian_state
from src.models.energy import BohrSommerfeldState, MonomialSection
from src.models.kahler import FirstTypeFamily
from src.models.phase_space import (
    Trivialization,
    action_angle_arrays,
    gauge_factor_array,
    phase_arrays,
)
from src.models.schrodinger import FirstTypeMap
from src.utils.errors import ConfigError, ConvergenceError, DomainError
from src.utils.numerics import (
    composite_gauss_legendre,
    extrapolate_to_zero,
    gauss_legendre,
    graded_breakpoints,
    loglog_slope,
)

logger = logging.getLogger(__name__)

SQRT_I_OVER_2 = np.exp(0.25j * np.pi) / np.sqrt(2.0)


def form_factor_array(q, p, t1, t2):
    """(p - iq)(1 + t1)/(p² + q²) + t2 (p - i t1 q), vectorized."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return (p - 1j * q) * (1.0 + t1) / (q * q + p * p) + t2 * (p - 1j * t1 * q)


def form_factor(pt, t1, t2):
    """
    Complex factor of the wedge dz^{(it1)} ∧ ((1/2h + t2) dh - i dθ) against ω.

    Args:
        pt (PhasePoint): Point other than the origin
        t1 (float): First-type time
        t2 (float): Second-type time

    Returns:
        complex
    """
    if pt.q == 0 and pt.p == 0:
        raise DomainError("form factor undefined at the elliptic fixed point")
    return complex(form_factor_array(pt.q, pt.p, t1, t2))


def wedge_identity_residual(pt, t1, t2):
    """
    |wedge - form_factor| / max(1, |form_factor|) from exact differentials.

    dz = dq + i t1 dp, dh = q dq + p dp, dθ = (q dp - p dq)/r²; the wedge
    is evaluated on (∂_q, ∂_p) where ω(∂_q, ∂_p) = 1.
    """
    if pt.q == 0 and pt.p == 0:
        raise DomainError("form factor undefined at the elliptic fixed point")
    q, p = float(pt.q), float(pt.p)
    r2 = q * q + p * p
    dz = (1.0 + 0j, 1j * t1)
    weight = 1.0 / r2 + t2
    alpha = (weight * q + 1j * p / r2, weight * p - 1j * q / r2)
    wedge = dz[0] * alpha[1] - dz[1] * alpha[0]
    expected = form_factor(pt, t1, t2)
    return float(abs(wedge - expected) / max(1.0, abs(expected)))


def halfform_density(q, p, t1, t2):
    """
    √G with G = e^{iθ} conj(form_factor); Im G > 0 so the principal root is used.

    Equals e^{iθ/2} √(conj form_factor) on the branch continuous for
    θ ∈ [0, 2π).
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.sqrt(q * q + p * p)
    g = (q + 1j * p) / r * np.conj(form_factor_array(q, p, t1, t2))
    return np.sqrt(g)


class Extrapolation(Enum):
    LAST_VALUE = "last_value"
    RICHARDSON = "richardson"


@dataclass(frozen=True)
class PairingSchedule:
    """Sequences t1 → 0 and t2 → ∞ along which the regularized pairing is evaluated"""

    t1_sequence: Tuple[float, ...] = (4e-3, 2e-3, 1e-3)
    t2_sequence: Tuple[float, ...] = (250.0, 500.0, 1000.0)
    extrapolation: Extrapolation = Extrapolation.RICHARDSON

    def __post_init__(self):
        t1 = tuple(float(t) for t in self.t1_sequence)
        t2 = tuple(float(t) for t in self.t2_sequence)
        object.__setattr__(self, "t1_sequence", t1)
        object.__setattr__(self, "t2_sequence", t2)
        if not isinstance(self.extrapolation, Extrapolation):
            try:
                object.__setattr__(self, "extrapolation", Extrapolation(self.extrapolation))
            except ValueError as exc:
                raise ConfigError(f"unknown extrapolation {self.extrapolation!r}") from exc
        if len(t1) < 3 or len(t2) < 3:
            raise ConfigError("schedule too short")
        if any(t <= 0 for t in t1 + t2):
            raise ConfigError("schedule times must be positive")
        if any(b >= a for a, b in zip(t1, t1[1:])):
            raise ConfigError("t1 sequence must decrease")
        if any(b <= a for a, b in zip(t2, t2[1:])):
            raise ConfigError("t2 sequence must increase")

    @classmethod
    def diagonal(cls, eps_values, extrapolation=Extrapolation.RICHARDSON):
        """t1 = ε, t2 = 1/ε for each ε"""
        eps_values = tuple(float(e) for e in eps_values)
        return cls(eps_values, tuple(1.0 / e for e in eps_values), extrapolation)


# narrow test functions need the finer end of the schedule
MOLLIFIER_SCHEDULE = PairingSchedule.diagonal([5e-4, 2.5e-4, 1.25e-4])


@dataclass
class PairingResult:
    value: complex
    steps: List[tuple]
    estimated_error: float
    oracle: Optional[complex] = None
    relative_error: Optional[float] = None
    order: Optional[float] = None
    path: str = "joint"

    def to_dict(self):
        def pack(z):
            return None if z is None else {"re": float(np.real(z)), "im": float(np.imag(z))}

        return {
            "path": self.path,
            "steps": [{"t1": t1, "t2": t2, "re": float(np.real(v)), "im": float(np.imag(v))}
                      for t1, t2, v in self.steps],
            "value": pack(self.value),
            "oracle": pack(self.oracle),
            "estimated_error": self.estimated_error,
            "relative_error": self.relative_error,
            "order": self.order,
        }


@dataclass(frozen=True)
class PairingMesh:
    """Quadrature mesh of the regularized pairing in (h, θ)"""

    n_h: int = 64
    widths: float = 9.0
    theta_order: int = 12
    grading: float = 0.35
    levels: int = 14

    def _graded_breaks(self):
        half = 0.5 * np.pi
        return np.unique(np.concatenate([
            graded_breakpoints(0.0, half, self.grading, self.levels, "a"),
            graded_breakpoints(half, np.pi, self.grading, self.levels, "b"),
            graded_breakpoints(np.pi, np.pi + half, self.grading, self.levels, "a"),
            graded_breakpoints(np.pi + half, 2.0 * np.pi, self.grading, self.levels, "b"),
        ]))

    def theta_rule(self):
        """Gauss-Legendre panels on [0, 2π) refined toward θ = 0, π, 2π"""
        return composite_gauss_legendre(self._graded_breaks(), self.theta_order)

    def focused_rule(self, angles, spread, halfwidth):
        """
        θ rule restricted to windows [c - halfwidth, c + halfwidth] around each angle c.

        Inside a window the panels are at most ``spread`` wide; the graded
        caustic breakpoints falling inside are kept.
        """
        windows = sorted((max(c - halfwidth, 0.0), min(c + halfwidth, 2.0 * np.pi)) for c in angles)
        merged = []
        for lo, hi in windows:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])

        graded = self._graded_breaks()
        points, weights = [], []
        for lo, hi in merged:
            uniform = np.linspace(lo, hi, int(np.ceil((hi - lo) / spread)) + 1)
            breaks = np.unique(np.concatenate([uniform, graded[(graded > lo) & (graded < hi)]]))
            x, w = composite_gauss_legendre(breaks, self.theta_order)
            points.append(x)
            weights.append(w)
        return np.concatenate(points), np.concatenate(weights)


class BKSPairing:
    """
    Regularized half-form BKS pairing ⟨U₁^{it1}ψ, U₂^{it2}φ_m⟩ and its limit.

    The pairing is antilinear in ψ and uses the density √(i/2) √(conj f)
    with f the form factor; dq dp = dh dθ.
    """

    def __init__(self, config, params=None):
        """
        Args:
            config (QuantConfig): ħ, grids and tolerances
            params (dict, optional): 'mesh' (PairingMesh), 'limit_tol',
                'limit_floor', 'u1' (params of FirstTypeMap)
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        params = params or {}
        self.config = config
        self.mesh = params.get("mesh", PairingMesh())
        self.limit_tol = params.get("limit_tol", 1e-2)
        self.limit_floor = params.get("limit_floor", 1e-3)
        self.u1_params = params.get("u1")
        self.mapper = FirstTypeMap(config, self.u1_params)
        self._theta_rule = self.mesh.theta_rule()

    def regularized(self, state, m, t1, t2, trivialization=Trivialization.SIGMA, nodes=None,
                    theta_rule=None):
        """
        Pairing at finite (t1, t2).

        Args:
            state (SchrodingerState): ψ
            m (int): Level of the energy-side state
            t1 (float): First-type time, positive
            t2 (float): Second-type time, positive
            trivialization (Trivialization): Frame both sections are expressed in
            nodes (tuple, optional): Momentum rule of ψ from FirstTypeMap
            theta_rule (tuple, optional): (θ nodes, weights), default the
                graded mesh over the whole circle

        Returns:
            complex
        """
        if t1 <= 0 or t2 <= 0:
            raise DomainError(f"regularized pairing needs t1 > 0 and t2 > 0, got ({t1}, {t2})")
        hbar = state.hbar
        section = MonomialSection(m, t2, hbar)
        sigma = np.sqrt(hbar / t2)
        lower = max(section.energy - self.mesh.widths * sigma, 0.0)
        h, wh = gauss_legendre(lower, section.energy + self.mesh.widths * sigma, self.mesh.n_h)
        theta, wt = self._theta_rule if theta_rule is None else theta_rule

        H, T = np.meshgrid(h, theta, indexing="ij")
        q, p = phase_arrays(H, T)
        nodes = nodes if nodes is not None else self.mapper.momentum_nodes(state)
        first = self.mapper.values(state, FirstTypeFamily(t1), q, p, nodes)
        second = section.u2(H, T)
        density = halfform_density(q, p, t1, t2) * np.exp(-0.5j * T)

        if trivialization is Trivialization.SIGMA:
            integrand = np.conj(first) * gauge_factor_array(
                q, p, Trivialization.SIGMA_TILDE, Trivialization.SIGMA, hbar) * second * density
        else:
            integrand = np.conj(first * gauge_factor_array(
                q, p, Trivialization.SIGMA, Trivialization.SIGMA_TILDE, hbar)) * second * density

        value = SQRT_I_OVER_2 * np.sum((wh[:, None] * wt[None, :] * integrand).ravel())
        self.logger.debug("pairing m=%d t1=%g t2=%g -> %s", m, t1, t2, value)
        return complex(value)

    def closed_form(self, state, m, breakpoints=None):
        """
        Limit pairing with the Bohr-Sommerfeld state as a circle integral.

        √(i/2) √a ∫₀^π √(sin φ) e^{i(m+½)φ} e^{-ia² sin 2φ/4ħ}
            [conj ψ(a cos φ) + (-1)^m conj ψ(-a cos φ)] dφ

        The √ endpoint behaviour is integrated with algebraic weights.

        Args:
            state (SchrodingerState): ψ with usable value_at
            m (int): Level
            breakpoints (list, optional): Interior φ where ψ is peaked

        Returns:
            complex
        """
        hbar = state.hbar
        a = BohrSommerfeldState(m, hbar).radius
        sign = -1.0 if m % 2 else 1.0

        def base(phi):
            x = a * np.cos(phi)
            psi = np.conj(state.value_at(x)) + sign * np.conj(state.value_at(-x))
            return np.exp(1j * (m + 0.5) * phi - 1j * a * a * np.sin(2.0 * phi) / (4.0 * hbar)) * psi

        def both(phi):
            return base(phi) * np.sqrt((np.sinc(phi / np.pi) + np.sinc(1.0 - phi / np.pi)) / np.pi)

        def left(phi):
            return base(phi) * np.sqrt(np.sinc(phi / np.pi))

        def right(phi):
            return base(phi) * np.sqrt(np.sinc(1.0 - phi / np.pi))

        def middle(phi):
            return base(phi) * np.sqrt(np.sin(phi))

        breaks = sorted({float(b) for b in (breakpoints or []) if 0.0 < b < np.pi})
        if not breaks:
            segments = [(0.0, np.pi, both, (0.5, 0.5))]
        else:
            edges = [0.0] + breaks + [np.pi]
            segments = [(edges[0], edges[1], left, (0.5, 0.0))]
            segments += [(lo, hi, middle, None) for lo, hi in zip(edges[1:-2], edges[2:-1])]
            segments.append((edges[-2], edges[-1], right, (0.0, 0.5)))

        total = 0j
        for lo, hi, fn, wvar in segments:
            for part, unit in ((np.real, 1.0), (np.imag, 1j)):
                kwargs = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
                if wvar is not None:
                    kwargs.update(weight="alg", wvar=wvar)
                value, _ = quad(lambda phi: float(part(complex(fn(phi)))), lo, hi, **kwargs)
                total += unit * value
        return complex(SQRT_I_OVER_2 * np.sqrt(a) * total)

    def limit(self, state, m, schedule=None, path="joint", theta_rule=None, breakpoints=None):
        """
        Extrapolated (t1, t2) → (0, ∞) pairing with oracle comparison.

        Args:
            state (SchrodingerState): ψ
            m (int): Level
            schedule (PairingSchedule, optional): Defaults to PairingSchedule()
            path (str): 'joint' (diagonal, step t1 + 1/t2) or 'iterated'
                (t1 → 0 at each t2, then t2 → ∞)
            theta_rule (tuple, optional): θ rule for every regularized pairing
            breakpoints (list, optional): Passed to the circle-integral oracle

        Returns:
            PairingResult

        Raises:
            ConvergenceError: If the extrapolation error exceeds ``limit_tol``
        """
        schedule = schedule or PairingSchedule()
        richardson = schedule.extrapolation is Extrapolation.RICHARDSON
        nodes = self.mapper.momentum_nodes(state)

        def pair(t1, t2):
            return self.regularized(state, m, t1, t2, nodes=nodes, theta_rule=theta_rule)

        def reduce(steps, values):
            if richardson:
                return extrapolate_to_zero(steps, values)
            return values[-1], float(abs(values[-1] - values[-2]))

        steps = []
        order = None
        if path == "joint":
            if len(schedule.t1_sequence) != len(schedule.t2_sequence):
                raise ConfigError("joint path needs t1 and t2 sequences of equal length")
            for t1, t2 in zip(schedule.t1_sequence, schedule.t2_sequence):
                steps.append((t1, t2, pair(t1, t2)))
            x = np.array([t1 + 1.0 / t2 for t1, t2, _ in steps])
            values = np.array([v for _, _, v in steps])
            value, error = reduce(x, values)
            gaps = np.abs(values - value)
            if np.all(gaps > 0):
                order = loglog_slope(x, gaps)
        elif path == "iterated":
            outer = []
            for t2 in schedule.t2_sequence:
                inner = []
                for t1 in schedule.t1_sequence:
                    inner.append(pair(t1, t2))
                    steps.append((t1, t2, inner[-1]))
                outer.append(reduce(np.array(schedule.t1_sequence), np.array(inner))[0])
            value, error = reduce(1.0 / np.array(schedule.t2_sequence), np.array(outer))
        else:
            raise ConfigError(f"unknown limit path {path!r}")

        value = complex(value)
        oracle = self.closed_form(state, m, breakpoints)
        if abs(oracle) > 1e-12:
            relative = abs(value - oracle) / abs(oracle)
        else:
            relative = abs(value - oracle)
        result = PairingResult(value, steps, float(error), oracle, float(relative), order, path)

        if error > self.limit_tol * max(abs(value), self.limit_floor):
            raise ConvergenceError("limit not reached; refine schedule", result.to_dict())
        self.logger.info("pairing limit m=%d (%s): %s, oracle %s, rel. error %.2e",
                         m, path, value, oracle, relative)
        return result

    def lagrangian_density(self, m, hbar, q):
        """
        Density of the limit pairing against conj ψ(q), read off the circle.

        Each circle point (q, ±P) contributes √(i/2) e^{-iqp/2ħ} e^{imθ} √(p e^{iθ}) / |p|.
        """
        a = BohrSommerfeldState(m, hbar).radius
        q = np.asarray(q, dtype=float)
        inside = np.abs(q) < a
        momentum = np.sqrt(np.where(inside, a * a - q * q, 1.0))
        total = np.zeros(q.shape, dtype=complex)
        for branch in (1.0, -1.0):
            p = branch * momentum
            _, theta = action_angle_arrays(q, p)
            root = np.sqrt(p * np.exp(1j * theta))
            total += SQRT_I_OVER_2 * np.exp(-0.5j * q * p / hbar + 1j * m * theta) * root / momentum
        return np.where(inside, total, 0.0)

    def bump_limit(self, m, center, width, schedule=None):
        """
        Limit pairing of a unit-mass Gaussian of the given width centred at ``center``.

        The bump is sampled on its own q and p grids sized to its width, and
        every regularized pairing uses θ panels confined to the two angles
        where the Bohr-Sommerfeld circle crosses the centre.

        Args:
            m (int): Level
            center (float): Centre, strictly inside the caustics
            width (float): Gaussian width w
            schedule (PairingSchedule, optional): Defaults to MOLLIFIER_SCHEDULE

        Returns:
            PairingResult
        """
        hbar = self.config.hbar
        a = BohrSommerfeldState(m, hbar).radius
        if abs(center) >= a:
            raise DomainError(f"bump centre {center} is not inside the caustics ±{a}")
        schedule = schedule or MOLLIFIER_SCHEDULE
        local = self.config.replace(
            q_grid={"min": center - 12.0 * width, "max": center + 12.0 * width, "count": 257},
            p_grid={"min": -10.0 * hbar / width, "max": 10.0 * hbar / width, "count": 513},
        )
        bump = gaussian_state(local, width=width, center=center)
        # unit-mass mollifier
        bump = bump.scaled((np.pi * width * width) ** 0.25 / (width * np.sqrt(2.0 * np.pi)))

        phi0 = float(np.arccos(center / a))
        sin0 = np.sin(phi0)
        spread = np.sqrt(width * width + max(schedule.t1_sequence) * hbar) / (a * sin0)
        # the crossing angle moves across the radial extent of the h mesh
        drift = self.mesh.widths * np.sqrt(hbar / min(schedule.t2_sequence)) * abs(np.cos(phi0)) / (a * a * sin0)
        rule = self.mesh.focused_rule([phi0, 2.0 * np.pi - phi0], spread, 10.0 * spread + drift)

        engine = BKSPairing(local, {"mesh": self.mesh, "limit_tol": self.limit_tol,
                                    "limit_floor": self.limit_floor, "u1": self.u1_params})
        return engine.limit(bump, m, schedule, theta_rule=rule, breakpoints=[phi0, np.pi - phi0])

    def mollified_density(self, m, q, width_fraction=0.05, schedule=None):
        """
        Density at q from limit pairings with narrow normalized Gaussians.

        Two widths w and w/2 are paired through ``bump_limit`` and combined
        as (4ρ_{w/2} - ρ_w)/3 to cancel the O(w²) smoothing error. Points
        on or beyond the caustics give 0.
        """
        hbar = self.config.hbar
        a = BohrSommerfeldState(m, hbar).radius
        q = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.zeros(q.shape, dtype=complex)
        for i, q0 in enumerate(q):
            if abs(q0) >= a:
                continue
            estimates = [self.bump_limit(m, q0, w, schedule).value
                         for w in (width_fraction * a, 0.5 * width_fraction * a)]
            out[i] = (4.0 * estimates[1] - estimates[0]) / 3.0
            self.logger.debug("mollified density m=%d at q=%g: %s", m, q0, out[i])
        return out


def regularized_pairing(state, m, t1, t2, config, trivialization=Trivialization.SIGMA):
    """⟨U₁^{it1}ψ, U₂^{it2}φ_m⟩_{BKS} at finite times."""
    return BKSPairing(config).regularized(state, m, t1, t2, trivialization)


def closed_form_pairing(state, m, config):
    """Limit pairing of ψ with the Bohr-Sommerfeld state of level m."""
    return BKSPairing(config).closed_form(state, m)


def pairing_limit(state, m, config, schedule=None, path="joint"):
    """Extrapolated limit of the regularized pairing along a schedule."""
    return BKSPairing(config).limit(state, m, schedule, path)


def pairing_map_B(m, config, route="closed", q=None, width_fraction=0.05):
    """
    Schrödinger-side representative of the Bohr-Sommerfeld state of level m.

    The density is the sum of both branches of ψ_{L_m}, so for m = 0 the value
    at q = 0 is √(i/2) ħ^{-1/4} √2 (1 + i).

    Args:
        m (int): Level
        config (QuantConfig): ħ and q grid
        route (str): 'closed' (density read off the circle integral) or
            'mollified' (limit pairings with shrinking Gaussians; each point
            costs two extrapolated limits, so pass a few q)
        q (array-like, optional): Evaluation points, default the q grid
        width_fraction (float): Mollifier width relative to the caustic radius

    Returns:
        SchrodingerState
    """
    engine = BKSPairing(config)
    hbar = config.hbar
    grid = config.q_grid.points if q is None else np.asarray(q, dtype=float)
    if route == "closed":
        evaluator = lambda x: engine.lagrangian_density(m, hbar, x)
        values = evaluator(grid)
    elif route == "mollified":
        evaluator = None
        values = engine.mollified_density(m, grid, width_fraction)
    else:
        raise ConfigError(f"unknown route {route!r}")
    return SchrodingerState(grid, values, hbar, f"B(m={m},{route})", evaluator)
