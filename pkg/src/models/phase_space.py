import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.data.grids import TWO_PI
from src.utils.errors import DomainError

logger = logging.getLogger(__name__)


class Trivialization(Enum):
    """Unitary frames of the prequantum line bundle.

    SIGMA has potential Θ = p dq, SIGMA_TILDE = e^{-iqp/2ħ} SIGMA has the
    rotation-invariant potential (p dq - q dp)/2 = -h dθ.
    """

    SIGMA = "sigma"
    SIGMA_TILDE = "sigma_tilde"


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float


@dataclass(frozen=True)
class ActionAngle:
    h: float
    theta: float


def action_angle_arrays(q, p):
    """
    Vectorized (q, p) -> (h, θ) with θ the full-plane angle in [0, 2π).

    Args:
        q (array-like): Positions
        p (array-like): Momenta

    Returns:
        tuple: (h, theta) arrays
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    h = 0.5 * (q * q + p * p)
    theta = np.mod(np.arctan2(p, q), TWO_PI)
    # np.mod of a tiny negative angle rounds up to exactly 2π
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return h, theta


def phase_arrays(h, theta):
    """Vectorized (h, θ) -> (q, p)."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise DomainError("action h must be nonnegative")
    r = np.sqrt(2.0 * h)
    return r * np.cos(theta), r * np.sin(theta)


def to_action_angle(pt):
    """
    Action-angle coordinates of a phase-space point.

    Args:
        pt (PhasePoint): Point other than the origin

    Returns:
        ActionAngle: h = (q² + p²)/2 and θ ∈ [0, 2π)
    """
    if pt.q == 0 and pt.p == 0:
        raise DomainError("angle undefined at elliptic fixed point")
    h, theta = action_angle_arrays(pt.q, pt.p)
    return ActionAngle(float(h), float(theta))


def from_action_angle(aa):
    """Inverse of to_action_angle; the origin is returned for h = 0."""
    q, p = phase_arrays(aa.h, aa.theta)
    return PhasePoint(float(q), float(p))


def gauge_factor_array(q, p, source, target, hbar=1.0):
    """
    Factor re-expressing a section scalar from one trivialization in another.

    Args:
        q (array-like): Positions
        p (array-like): Momenta
        source (Trivialization): Frame the scalar is given in
        target (Trivialization): Frame wanted
        hbar (float): Planck constant

    Returns:
        numpy.ndarray: Unimodular complex factors
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if source == target:
        return np.ones(np.broadcast(q, p).shape, dtype=complex)
    sign = 1.0 if source is Trivialization.SIGMA else -1.0
    return np.exp(sign * 0.5j * q * p / hbar)


def gauge_factor(pt, source, target, hbar=1.0):
    """Scalar form of gauge_factor_array for a single PhasePoint."""
    return complex(gauge_factor_array(pt.q, pt.p, source, target, hbar))


def potential_contraction(trivialization, q, p, x_q, x_p):
    """
    Contraction Θ(X) of the connection potential with a vector field.

    Args:
        trivialization (Trivialization): Frame defining the potential
        q, p (array-like): Base points
        x_q, x_p (array-like): Cartesian components of X

    Returns:
        numpy.ndarray: Θ(X) at each point
    """
    if trivialization is Trivialization.SIGMA:
        return p * x_q
    return 0.5 * (p * x_q - q * x_p)
