from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from src.utils.errors import DomainError
from src.utils.numerics import hermite_functions

SQRT_DQ = "sqrt(dq)"
SQRT_DZ = "sqrt(dz)"
SQRT_DU = "sqrt(du)"


@dataclass(frozen=True, eq=False)
class SchrodingerState:
    """
    Wavefunction ψ(q) ⊗ √dq sampled on a uniform q grid.

    ``evaluator`` is an optional closed form used for off-grid values;
    otherwise values between samples come from cubic splines and vanish
    outside the grid.
    """

    q: np.ndarray
    psi_q: np.ndarray
    hbar: float = 1.0
    label: str = "state"
    evaluator: Optional[Callable] = field(default=None, compare=False, repr=False)
    p: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    psi_p: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    halfform_tag: str = SQRT_DQ

    def __post_init__(self):
        if np.shape(self.q) != np.shape(self.psi_q) or np.ndim(self.q) != 1:
            raise DomainError("psi_q must be a one-dimensional array matching the q grid")

    @property
    def dq(self):
        return float(self.q[1] - self.q[0])

    def norm(self):
        """L² norm by the trapezoid rule"""
        return float(np.sqrt(trapezoid(np.abs(self.psi_q) ** 2, self.q)))

    def inner(self, other):
        """⟨self, other⟩ = ∫ conj(self) other dq on the common grid"""
        if not np.array_equal(self.q, other.q):
            raise DomainError("inner product needs states on the same grid")
        return complex(trapezoid(np.conj(self.psi_q) * other.psi_q, self.q))

    def value_at(self, x):
        """Evaluate ψ at arbitrary points"""
        x = np.asarray(x, dtype=float)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(x), dtype=complex)

        real = CubicSpline(self.q, self.psi_q.real, extrapolate=False)
        imag = CubicSpline(self.q, self.psi_q.imag, extrapolate=False)
        values = real(x) + 1j * imag(x)
        return np.where(np.isnan(values), 0.0, values)

    def scaled(self, factor):
        """The state multiplied by a complex constant"""
        evaluator = None
        if self.evaluator is not None:
            base = self.evaluator
            evaluator = lambda x: factor * base(x)
        psi_p = None if self.psi_p is None else factor * self.psi_p
        return replace(self, psi_q=factor * self.psi_q, evaluator=evaluator, psi_p=psi_p,
                       label=f"{factor}*{self.label}")

    def combined(self, other, a=1.0, b=1.0):
        """Linear combination a*self + b*other on the common grid"""
        if not np.array_equal(self.q, other.q):
            raise DomainError("linear combination needs states on the same grid")
        evaluator = None
        if self.evaluator is not None and other.evaluator is not None:
            f, g = self.evaluator, other.evaluator
            evaluator = lambda x: a * f(x) + b * g(x)
        return SchrodingerState(self.q, a * self.psi_q + b * other.psi_q, self.hbar,
                                f"{a}*{self.label}+{b}*{other.label}", evaluator)


@dataclass(frozen=True, eq=False)
class PolarizedSectionSample:
    """
    Section samples on a product grid.

    ``axes`` is ('q', 'p') or ('h', 'theta'); ``values[i, j]`` sits at
    (coords[0][i], coords[1][j]). ``halfform_label`` names the half-form
    frame the scalar is taken against.
    """

    values: np.ndarray
    axes: Tuple[str, str]
    coords: Tuple[np.ndarray, np.ndarray]
    family: object
    trivialization: object
    halfform_label: str
    hbar: float = 1.0

    def __post_init__(self):
        if self.axes not in (("q", "p"), ("h", "theta")):
            raise DomainError(f"unsupported sample axes {self.axes}")
        shape = (len(self.coords[0]), len(self.coords[1]))
        if np.shape(self.values) != shape:
            raise DomainError(f"values shape {np.shape(self.values)} does not match grid {shape}")

    def spacing(self, axis):
        c = self.coords[axis]
        return float(c[1] - c[0])

    def mesh(self):
        """Coordinate arrays broadcast to the sample shape"""
        return np.meshgrid(self.coords[0], self.coords[1], indexing="ij")

    def mesh_qp(self):
        """Cartesian coordinates of every sample"""
        a, b = self.mesh()
        if self.axes == ("q", "p"):
            return a, b
        r = np.sqrt(2.0 * a)
        return r * np.cos(b), r * np.sin(b)

    def interior(self, width):
        """Drop ``width`` samples from each end of both axes"""
        if width == 0:
            return self
        return replace(
            self,
            values=self.values[width:-width, width:-width],
            coords=(self.coords[0][width:-width], self.coords[1][width:-width]),
        )

    def with_values(self, values, **changes):
        return replace(self, values=values, **changes)


def hermite_evaluator(k, hbar):
    """Closed form of the k-th normalized oscillator eigenfunction"""
    scale = np.sqrt(hbar)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return hbar ** (-0.25) * hermite_functions(k, x / scale)[k] + 0j

    return evaluate


def hermite_state(k, config):
    """
    k-th eigenfunction of -(ħ²/2)∂² + q²/2 on the configured q grid.

    Args:
        k (int): Index, nonnegative
        config (QuantConfig): Grid and ħ

    Returns:
        SchrodingerState
    """
    if int(k) != k or k < 0:
        raise DomainError(f"Hermite index must be a nonnegative integer, got {k}")
    k = int(k)
    q = config.q_grid.points
    evaluator = hermite_evaluator(k, config.hbar)
    return SchrodingerState(q, evaluator(q), config.hbar, f"hermite({k})", evaluator)


def gaussian_state(config, width=None, center=0.0, momentum=0.0):
    """
    Normalized Gaussian (πw²)^{-1/4} exp(-(q-c)²/(2w²) + i k q/ħ).

    Args:
        config (QuantConfig): Grid and ħ
        width (float, optional): Width w, defaults to sqrt(ħ)
        center (float): Centre c
        momentum (float): Mean momentum k
    """
    hbar = config.hbar
    width = np.sqrt(hbar) if width is None else float(width)
    if width <= 0:
        raise DomainError(f"Gaussian width must be positive, got {width}")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return (np.pi * width ** 2) ** (-0.25) * np.exp(
            -((x - center) ** 2) / (2.0 * width ** 2) + 1j * momentum * x / hbar
        )

    q = config.q_grid.points
    return SchrodingerState(q, evaluate(q), hbar, f"gaussian(w={width},c={center},k={momentum})", evaluate)


def plane_wave_state(config, momentum, window=3.0):
    """Plane wave e^{i p0 q/ħ} under a wide Gaussian window."""
    state = gaussian_state(config, width=window, momentum=momentum)
    return replace(state, label=f"plane_wave(p0={momentum},window={window})")
