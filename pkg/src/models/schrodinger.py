import logging
from dataclasses import replace

import numpy as np
from scipy.integrate import trapezoid

from src.data.states import SQRT_DZ, PolarizedSectionSample, SchrodingerState
from src.models.kahler import FirstTypeFamily
from src.models.phase_space import Trivialization
from src.models.prequantum import PrequantumOperator
from src.utils.errors import DomainError, QuadratureError
from src.utils.numerics import (
    composite_gauss_legendre,
    fd_derivative,
    loglog_slope,
    stencil_width,
    trim,
)

logger = logging.getLogger(__name__)

SQRT_2PI = np.sqrt(2.0 * np.pi)


def _trapezoid_weights(x):
    w = np.empty_like(x)
    dx = np.diff(x)
    w[0] = 0.5 * dx[0]
    w[-1] = 0.5 * dx[-1]
    w[1:-1] = 0.5 * (dx[:-1] + dx[1:])
    return w


def fourier_values(q, psi_q, p, hbar, chunk=2048):
    """
    ψ̃(p) = (1/(√(2π) ħ)) ∫ e^{-ipq/ħ} ψ(q) dq by the trapezoid rule.

    Args:
        q (numpy.ndarray): Uniform sample positions
        psi_q (numpy.ndarray): Samples ψ(q)
        p (array-like): Momenta to evaluate at
        hbar (float): Planck constant
        chunk (int): Rows of the kernel matrix formed at once

    Returns:
        numpy.ndarray: ψ̃(p)
    """
    p = np.asarray(p, dtype=float)
    weighted = _trapezoid_weights(q) * psi_q
    flat = p.ravel()
    out = np.empty(flat.size, dtype=complex)
    for start in range(0, flat.size, chunk):
        rows = flat[start:start + chunk]
        out[start:start + chunk] = np.exp(-1j * np.outer(rows, q) / hbar) @ weighted
    return (out / (SQRT_2PI * hbar)).reshape(p.shape)


def inverse_fourier_values(p, psi_p, q, hbar, weights=None, chunk=2048):
    """
    ψ(q) = (1/√(2π)) ∫ e^{ipq/ħ} ψ̃(p) dp, trapezoid unless weights are given.
    """
    q = np.asarray(q, dtype=float)
    w = _trapezoid_weights(p) if weights is None else weights
    weighted = w * psi_p
    flat = q.ravel()
    out = np.empty(flat.size, dtype=complex)
    for start in range(0, flat.size, chunk):
        rows = flat[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(rows, p) / hbar) @ weighted
    return (out / SQRT_2PI).reshape(q.shape)


def fourier(state, config):
    """
    Momentum representation of a state on the configured dual grid.

    Args:
        state (SchrodingerState): Position-space samples
        config (QuantConfig): Supplies the p grid

    Returns:
        SchrodingerState: Same state with ``p`` and ``psi_p`` filled in
    """
    p = config.p_grid.points
    psi_p = fourier_values(state.q, state.psi_q, p, state.hbar)
    return replace(state, p=p, psi_p=psi_p)


def inverse_fourier(p, psi_p, config, label="inverse_fourier"):
    """Position-space state from momentum samples on the configured q grid"""
    q = config.q_grid.points
    psi_q = inverse_fourier_values(p, psi_p, q, config.hbar)
    return SchrodingerState(q, psi_q, config.hbar, label, p=np.asarray(p), psi_p=np.asarray(psi_p))


def h1_sch(state, config):
    """
    Free kinetic operator -(ħ²/2)∂²_q applied on the Fourier side.

    Args:
        state (SchrodingerState): Input
        config (QuantConfig): Grids

    Returns:
        SchrodingerState: (p²/2) ψ̃ transformed back to the q grid
    """
    with_p = fourier(state, config)
    kinetic = 0.5 * with_p.p ** 2 * with_p.psi_p
    return inverse_fourier(with_p.p, kinetic, config, label=f"h1_sch({state.label})")


def h1_sch_fd(state, order=4):
    """Finite-difference -(ħ²/2)ψ'' on the interior of the q grid"""
    second = fd_derivative(state.psi_q, state.dq, order=order, deriv=2)
    width = stencil_width(order)
    return state.q[width:-width], -0.5 * state.hbar ** 2 * second


def gaussian_u1_closed_form(q, p, t1, hbar):
    """
    First-type image of (πħ)^{-1/4} e^{-q²/2ħ}.

    (πħ)^{-1/4} (1+t)^{-1/2} exp(-z²/(2ħ(1+t)) - t p²/(2ħ)), z = q + i t p.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    z = q + 1j * t1 * p
    return (np.pi * hbar) ** (-0.25) / np.sqrt(1.0 + t1) * np.exp(
        -z * z / (2.0 * hbar * (1.0 + t1)) - t1 * p * p / (2.0 * hbar)
    )


class FirstTypeMap:
    """
    Regularization map U₁ of the first-type flow.

    U₁ψ(q, p) = (1/√2π) ∫ e^{ip₀q/ħ} e^{-t(p+p₀)²/2ħ} ψ̃(p₀) dp₀, evaluated
    with composite Gauss-Legendre panels in p₀. The p₀ window is the
    momentum support of ψ̃ and the panel count follows the kernel phase
    q p₀/ħ, so the rule scales with ħ and with the state's momentum spread.
    """

    def __init__(self, config, params=None):
        """
        Args:
            config (QuantConfig): Grids, ħ and tolerances
            params (dict, optional): 'panels' (minimum count), 'order',
                'cutoff', 'support_tol', 'panel_phase', 'max_panels',
                'edge_factor', 'reconstruction_tol', 'chunk', 'block'
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        params = params or {}
        self.config = config
        self.panels = params.get("panels", 16)
        self.order = params.get("order", 16)
        self.cutoff = params.get("cutoff", 1e-16)
        self.support_tol = params.get("support_tol", 1e-12)
        self.panel_phase = params.get("panel_phase", 0.75 * self.order)
        self.max_panels = params.get("max_panels", 512)
        self.edge_factor = params.get("edge_factor", 2.0)
        self.reconstruction_tol = params.get("reconstruction_tol", max(1e-8, 100 * config.quad_tol))
        self.chunk = params.get("chunk", 8192)
        self.block = params.get("block", 2 ** 21)

    def momentum_window(self, state):
        """
        Interval of p₀ where |ψ̃| exceeds ``support_tol`` of its peak.

        Read off the configured p grid and padded by one grid step.

        Returns:
            tuple: (low, high)
        """
        scan = self.config.p_grid.points
        amplitude = np.abs(fourier_values(state.q, state.psi_q, scan, state.hbar))
        peak = np.max(amplitude)
        if peak == 0:
            return float(scan[0]), float(scan[-1])
        above = np.flatnonzero(amplitude >= self.support_tol * peak)
        step = scan[1] - scan[0]
        return float(max(scan[above[0]] - step, scan[0])), float(min(scan[above[-1]] + step, scan[-1]))

    def panel_count(self, state, low, high):
        """Panels keeping the kernel phase below ``panel_phase`` radians per panel"""
        reach = np.max(np.abs(state.q))
        needed = int(np.ceil(reach * (high - low) / (state.hbar * self.panel_phase)))
        return int(min(max(self.panels, needed), self.max_panels))

    def _rule(self, state, low, high, panels, scale):
        breaks = np.linspace(low, high, panels + 1)
        nodes, weights = composite_gauss_legendre(breaks, self.order)
        amplitude = fourier_values(state.q, state.psi_q, nodes, state.hbar)

        keep = np.abs(amplitude) >= self.cutoff * np.max(np.abs(amplitude))
        nodes, weighted = nodes[keep], (weights * amplitude)[keep]

        rebuilt = inverse_fourier_values(nodes, weighted, state.q, state.hbar, weights=1.0)
        error = float(np.max(np.abs(rebuilt - state.psi_q)) / scale) if scale > 0 else 0.0
        return nodes, weighted, error

    def momentum_nodes(self, state):
        """
        Quadrature nodes p₀ and weighted amplitudes w·ψ̃(p₀).

        Nodes where |ψ̃| is below ``cutoff`` times its maximum are dropped.
        The rule is validated by reconstructing ψ on the q grid; the panel
        count is doubled until the reconstruction passes or reaches
        ``max_panels``. A state that has not decayed at the grid boundary
        is only held to ``edge_factor`` times its boundary value.

        Raises:
            QuadratureError: If no refinement reproduces the state
        """
        low, high = self.momentum_window(state)
        panels = self.panel_count(state, low, high)
        scale = np.max(np.abs(state.psi_q))
        edge = max(abs(state.psi_q[0]), abs(state.psi_q[-1])) / scale if scale > 0 else 0.0
        tolerance = max(self.reconstruction_tol, self.edge_factor * float(edge))
        if tolerance > self.reconstruction_tol:
            self.logger.warning("state is %.1e of its peak at the grid boundary; reconstruction held to %.1e",
                                edge, tolerance)

        nodes, weighted, error = self._rule(state, low, high, panels, scale)
        while error > tolerance and panels < self.max_panels:
            self.logger.debug("momentum rule: %d panels, error %.2e; refining", panels, error)
            panels = min(2 * panels, self.max_panels)
            nodes, weighted, error = self._rule(state, low, high, panels, scale)

        if error > tolerance:
            raise QuadratureError(
                "momentum quadrature does not reproduce the state",
                {"error": error, "tolerance": tolerance, "panels": panels, "order": self.order,
                 "nodes": int(nodes.size), "window": [low, high]},
            )
        self.logger.debug("momentum rule on [%.3g, %.3g]: %d panels, %d nodes, error %.2e",
                          low, high, panels, nodes.size, error)
        return nodes, weighted

    def values(self, state, fam, q, p, nodes=None):
        """
        Evaluate U₁ψ at arbitrary points.

        Args:
            state (SchrodingerState): ψ
            fam (FirstTypeFamily): Flow time t1
            q, p (array-like): Broadcastable evaluation points
            nodes (tuple, optional): Result of momentum_nodes, reused if given

        Returns:
            numpy.ndarray: Scalar part in the σ trivialization
        """
        q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
        p0, weighted = nodes if nodes is not None else self.momentum_nodes(state)
        hbar = state.hbar
        t1 = fam.t1

        flat_q, flat_p = q.ravel(), p.ravel()
        out = np.empty(flat_q.size, dtype=complex)
        rows = max(1, min(self.chunk, self.block // max(p0.size, 1)))
        for start in range(0, flat_q.size, rows):
            qs = flat_q[start:start + rows, None]
            ps = flat_p[start:start + rows, None]
            kernel = np.exp(1j * qs * p0 / hbar - t1 * (ps + p0) ** 2 / (2.0 * hbar))
            out[start:start + rows] = kernel @ weighted
        return (out / SQRT_2PI).reshape(q.shape)

    def apply(self, state, fam, q=None, p=None):
        """U₁ψ sampled on the product grid q × p."""
        q = self.config.q_grid.points if q is None else np.asarray(q, dtype=float)
        p = self.config.p_grid.points if p is None else np.asarray(p, dtype=float)
        Q, P = np.meshgrid(q, p, indexing="ij")
        values = self.values(state, fam, Q, P)
        return PolarizedSectionSample(values, ("q", "p"), (q, p), fam, Trivialization.SIGMA, SQRT_DZ, state.hbar)


def u1_map(state, fam, config, q=None, p=None):
    """U₁ψ on the product grid q × p (configured grids by default)."""
    return FirstTypeMap(config).apply(state, fam, q, p)


def u1_pde_residual(sample, fd_order=4):
    """
    Sup norm of (-∂_p + i t1 ∂_q - p t1/ħ) U₁ψ on the grid interior.

    Args:
        sample (PolarizedSectionSample): Output of u1_map
        fd_order (int): Stencil order

    Returns:
        float: Residual
    """
    if sample.axes != ("q", "p") or not isinstance(sample.family, FirstTypeFamily):
        raise DomainError("polarization residual needs a first-type sample on (q, p) axes")
    width = stencil_width(fd_order)
    t1 = sample.family.t1
    d_q = trim(fd_derivative(sample.values, sample.spacing(0), axis=0, order=fd_order), width, axes=(1,))
    d_p = trim(fd_derivative(sample.values, sample.spacing(1), axis=1, order=fd_order), width, axes=(0,))
    inner = sample.interior(width)
    _, p = inner.mesh()
    residual = -d_p + 1j * t1 * d_q - p * t1 / sample.hbar * inner.values
    return float(np.max(np.abs(residual)))


def pde_refinement(state, fam, config, spacings=(0.1, 0.05, 0.025), box=1.0, fd_order=None):
    """
    Polarization residual on a ladder of square grids [-box, box]².

    Returns:
        tuple: (spacings, residuals, fitted order)
    """
    fd_order = config.fd_order if fd_order is None else fd_order
    mapper = FirstTypeMap(config)
    nodes = mapper.momentum_nodes(state)
    residuals = []
    for d in spacings:
        n = int(round(2.0 * box / d)) + 1
        axis = np.linspace(-box, box, n)
        Q, P = np.meshgrid(axis, axis, indexing="ij")
        sample = PolarizedSectionSample(
            mapper.values(state, fam, Q, P, nodes), ("q", "p"), (axis, axis),
            fam, Trivialization.SIGMA, SQRT_DZ, state.hbar,
        )
        residuals.append(u1_pde_residual(sample, fd_order))
    slope = loglog_slope(spacings, residuals)
    logger.info("polarization residual ladder %s -> order %.3f", residuals, slope)
    return list(spacings), residuals, slope


def u1_consistency_check(state, fam, dt, config, q=None, p=None):
    """
    Generator identity of the first-type map.

    Compares d/dt U₁^{it}ψ (central difference, one-sided at t = 0) with
    (1/ħ)(ĥ₁^{pQ} U₁ψ - U₁ ĥ₁^{Sch}ψ) on the interior of the grid.

    Args:
        state (SchrodingerState): ψ
        fam (FirstTypeFamily): Time t1 at which the identity is checked
        dt (float): Time step
        config (QuantConfig): Grids, ħ and stencil order
        q, p (array-like, optional): Check grid, default [-1.5, 1.5]² with
            spacing 0.05

    Returns:
        float: Sup-norm residual
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    q = np.linspace(-1.5, 1.5, 61) if q is None else np.asarray(q, dtype=float)
    p = np.linspace(-1.5, 1.5, 61) if p is None else np.asarray(p, dtype=float)
    Q, P = np.meshgrid(q, p, indexing="ij")
    mapper = FirstTypeMap(config)
    nodes = mapper.momentum_nodes(state)
    t = fam.t1

    def at(time):
        return mapper.values(state, FirstTypeFamily(time), Q, P, nodes)

    if t >= dt:
        d_dt = (at(t + dt) - at(t - dt)) / (2.0 * dt)
    else:
        d_dt = (-3.0 * at(t) + 4.0 * at(t + dt) - at(t + 2.0 * dt)) / (2.0 * dt)

    current = PolarizedSectionSample(at(t), ("q", "p"), (q, p), fam, Trivialization.SIGMA, SQRT_DZ, state.hbar)
    prequantum = PrequantumOperator("h1", {"fd_order": config.fd_order}).apply(current)

    kinetic_state = h1_sch(state, config)
    transported = mapper.values(kinetic_state, fam, Q, P)

    width = stencil_width(config.fd_order)
    lhs = trim(d_dt, width)
    rhs = (prequantum.values - trim(transported, width)) / state.hbar
    residual = float(np.max(np.abs(lhs - rhs)))
    logger.debug("u1 generator residual at t=%g, dt=%g: %.3e", t, dt, residual)
    return residual
