import logging
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class FirstTypeFamily:
    """
    Imaginary-time flow of the free-particle complexifier h1 = p²/2.

    The polarization at time t1 is spanned by ∂/∂z̄ with z = q + i t1 p.
    """

    t1: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.t1) or self.t1 < 0:
            raise DomainError(f"t1 must be nonnegative, got {self.t1}")

    @staticmethod
    def complexifier(q, p):
        """h1 = p²/2, generator of the first-type flow"""
        return 0.5 * np.asarray(p) ** 2

    def z_array(self, q, p):
        return np.asarray(q) + 1j * self.t1 * np.asarray(p)


@dataclass(frozen=True)
class SecondTypeFamily:
    """
    Imaginary-time flow of the toric regulator h2 = H²/2.

    The toric symplectic potential is g(h) = h log(h)/2 - h/2 + t2 h²/2.
    """

    t2: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.t2) or self.t2 < 0:
            raise DomainError(f"t2 must be nonnegative, got {self.t2}")

    @staticmethod
    def regulator(h):
        """h2 as a function of the action, h²/2"""
        return 0.5 * np.asarray(h) ** 2

    def g(self, h):
        h = _positive(h)
        return 0.5 * h * np.log(h) - 0.5 * h + 0.5 * self.t2 * h * h

    def g_prime(self, h):
        h = _positive(h)
        return 0.5 * np.log(h) + self.t2 * h

    def g_second(self, h):
        h = _positive(h)
        return 0.5 / h + self.t2

    def beta(self):
        """Normalization β(t) = 1/t taking du to dh as t → ∞."""
        return np.inf if self.t2 == 0 else 1.0 / self.t2


@dataclass(frozen=True)
class LegendreData:
    v: float
    h_of_v: float
    k: float


def _positive(h):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError("toric coordinates need h > 0")
    return h


def z_coord(pt, fam):
    """Complex coordinate z = q + i t1 p of the first-type polarization."""
    return complex(fam.z_array(pt.q, pt.p))


def symplectic_potential(h, fam):
    """
    Toric symplectic potential g(h).

    Args:
        h (float): Action, must be positive
        fam (SecondTypeFamily): Flow time t2

    Returns:
        float: g(h)
    """
    return float(fam.g(h))


class LegendreSolver:
    """
    Inverse Legendre map v -> h for v = g'(h) = log(h)/2 + t2 h.

    Works in x = log h, where F(x) = x/2 + t2 e^x - v is increasing and
    convex. Newton started from the right end of the bracket
    [b - 2 t2 e^b, b], b = min(2v, max(0, log(v/t2))), decreases
    monotonically to the root; a bisection step is taken whenever an
    iterate leaves the bracket.
    """

    def __init__(self, params=None):
        """
        Args:
            params (dict, optional): 'max_iter' and 'tol' (relative residual)
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        params = params or {}
        self.max_iter = params.get("max_iter", 100)
        self.tol = params.get("tol", 1e-15)

    def solve(self, v, fam):
        """
        Args:
            v (float): Dual coordinate
            fam (SecondTypeFamily): Flow time t2

        Returns:
            LegendreData: h(v) and the Kähler potential k(v) = h v - g(h)
        """
        v = float(v)
        t2 = fam.t2
        upper = 2.0 * v
        if t2 == 0:
            x = upper
        else:
            if v > 0:
                # t2 e^x ≤ v whenever the root is nonnegative
                upper = min(upper, max(0.0, float(np.log(v / t2))))
            lower = upper - 2.0 * t2 * np.exp(upper)
            x = upper
            for iteration in range(self.max_iter):
                f = 0.5 * x + t2 * np.exp(x) - v
                if abs(f) <= self.tol * max(1.0, abs(v)):
                    break
                if f > 0:
                    upper = x
                else:
                    lower = x
                step = f / (0.5 + t2 * np.exp(x))
                if abs(step) <= 4.0 * np.finfo(float).eps * max(1.0, abs(x)):
                    break
                candidate = x - step
                if not lower <= candidate <= upper:
                    self.logger.debug("Newton step left bracket at iteration %d; bisecting", iteration)
                    candidate = 0.5 * (lower + upper)
                if candidate == x:
                    break
                x = candidate
            else:
                raise ConvergenceError(
                    "Legendre inversion did not converge",
                    {"v": v, "t2": t2, "x": x, "bracket": (lower, upper)},
                )

        h = float(np.exp(x))
        k = h * v - float(fam.g(h))
        return LegendreData(v=v, h_of_v=h, k=k)


_default_solver = LegendreSolver()


def legendre(v, fam):
    """Solve v = g'(h) for h and return the Legendre data."""
    return _default_solver.solve(v, fam)


def w_coord(aa, fam):
    """
    Holomorphic toric coordinate w = sqrt(2h) e^{t2 h} e^{iθ}.

    Args:
        aa (ActionAngle): Point with h > 0
        fam (SecondTypeFamily): Flow time t2

    Returns:
        complex: w; at t2 = 0 this is q + i p
    """
    if aa.h <= 0:
        raise DomainError("w coordinate undefined at h = 0")
    return complex(np.sqrt(2.0 * aa.h) * np.exp(fam.t2 * aa.h) * np.exp(1j * aa.theta))


def u_coord(aa, fam):
    """Logarithmic coordinate u = log(w/√2) = t2 h + log(h)/2 + iθ."""
    if aa.h <= 0:
        raise DomainError("u coordinate undefined at h = 0")
    return complex(fam.t2 * aa.h + 0.5 * np.log(aa.h), aa.theta)


def du_form_components(aa, fam):
    """Coefficients (dh, dθ) of du: (1/(2h) + t2, i)."""
    if aa.h <= 0:
        raise DomainError("du undefined at h = 0")
    return complex(fam.g_second(aa.h)), 1j
