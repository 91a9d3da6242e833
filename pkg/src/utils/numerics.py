import logging

import numpy as np
from scipy.special import roots_legendre
from sklearn.linear_model import LinearRegression

from src.utils.errors import DomainError

logger = logging.getLogger(__name__)

# Centered stencils keyed by (derivative, accuracy order)
_STENCILS = {
    (1, 2): np.array([-0.5, 0.0, 0.5]),
    (1, 4): np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]),
    (2, 2): np.array([1.0, -2.0, 1.0]),
    (2, 4): np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
}


def gauss_legendre(a, b, n):
    """
    Gauss-Legendre nodes and weights mapped to [a, b].

    Args:
        a (float): Lower limit
        b (float): Upper limit
        n (int): Number of nodes

    Returns:
        tuple: (points, weights) as numpy arrays
    """
    x, w = roots_legendre(n)
    points = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return points, weights


def composite_gauss_legendre(breakpoints, order):
    """
    Composite Gauss-Legendre rule with one panel per consecutive breakpoint pair.

    Args:
        breakpoints (array-like): Increasing panel boundaries
        order (int): Nodes per panel

    Returns:
        tuple: (points, weights)
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    if breakpoints.ndim != 1 or breakpoints.size < 2 or np.any(np.diff(breakpoints) <= 0):
        raise DomainError("panel breakpoints must be strictly increasing")

    x, w = roots_legendre(order)
    left = breakpoints[:-1, None]
    half = 0.5 * np.diff(breakpoints)[:, None]
    points = left + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return points.ravel(), weights.ravel()


def graded_breakpoints(a, b, ratio, levels, toward="a"):
    """
    Panel boundaries on [a, b] shrinking geometrically toward one end.

    The smallest panel has width (b - a) * ratio**levels.

    Args:
        a (float): Left end
        b (float): Right end
        ratio (float): Geometric grading ratio in (0, 1)
        levels (int): Number of graded panels besides the innermost one
        toward (str): 'a' or 'b', the end that is refined

    Returns:
        numpy.ndarray: Increasing breakpoints including both ends
    """
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"grading ratio must lie in (0, 1), got {ratio}")

    offsets = (b - a) * ratio ** np.arange(levels, -1, -1, dtype=float)
    if toward == "a":
        return np.concatenate(([a], a + offsets))
    if toward == "b":
        return np.concatenate((b - offsets[::-1], [b]))
    raise DomainError(f"unknown grading end: {toward}")


def periodic_trapezoid(n, a=0.0, b=2.0 * np.pi):
    """Nodes and weights of the trapezoid rule for a periodic integrand on [a, b)."""
    nodes = a + (b - a) * np.arange(n) / n
    weights = np.full(n, (b - a) / n)
    return nodes, weights


def fd_derivative(values, spacing, axis=0, order=4, deriv=1):
    """
    Centered finite-difference derivative along one axis.

    Only interior samples are returned: the output is shorter by
    ``order`` points along ``axis``.

    Args:
        values (numpy.ndarray): Samples on a uniform grid
        spacing (float): Grid spacing along ``axis``
        axis (int): Axis to differentiate along
        order (int): Accuracy order, 2 or 4
        deriv (int): Derivative order, 1 or 2

    Returns:
        numpy.ndarray: Derivative on the interior points
    """
    key = (deriv, order)
    if key not in _STENCILS:
        raise DomainError(f"no stencil for derivative {deriv} at order {order}")

    coeffs = _STENCILS[key]
    width = len(coeffs) // 2
    moved = np.moveaxis(np.asarray(values), axis, 0)
    n = moved.shape[0]
    if n < 2 * width + 1:
        raise DomainError("grid too coarse (stencil out of bounds)")

    out = np.zeros((n - 2 * width,) + moved.shape[1:], dtype=np.result_type(moved, float))
    for k, c in enumerate(coeffs):
        if c != 0.0:
            out += c * moved[k:n - 2 * width + k]
    return np.moveaxis(out / spacing ** deriv, 0, axis)


def stencil_width(order):
    """Half width of the centered stencils of the given order."""
    return order // 2


def trim(values, width, axes=(0, 1)):
    """Drop ``width`` samples from both ends of each listed axis."""
    if width == 0:
        return values
    index = [slice(None)] * np.ndim(values)
    for axis in axes:
        index[axis] = slice(width, -width)
    return values[tuple(index)]


def extrapolate_to_zero(steps, values):
    """
    Polynomial extrapolation of a sequence f(x_k) to x = 0.

    Fits a polynomial of degree len(steps) - 1 through the samples and
    evaluates it at zero. The error estimate is the change of the
    extrapolant when the coarsest sample is dropped.

    Args:
        steps (array-like): Step variables x_k > 0
        values (array-like): Real or complex samples f(x_k)

    Returns:
        tuple: (limit, estimated_error)
    """
    steps = np.asarray(steps, dtype=float)
    values = np.asarray(values)
    if steps.size != values.size:
        raise DomainError("steps and values must have the same length")
    if steps.size == 0:
        raise DomainError("cannot extrapolate an empty sequence")

    def _limit(x, f):
        scale = np.max(np.abs(x))
        mat = np.vander(x / scale, len(x), increasing=True)
        coeffs = np.linalg.solve(mat, f)
        return coeffs[0]

    value = _limit(steps, values)
    if steps.size == 1:
        return value, float("inf")

    coarsest = np.argmax(steps)
    keep = np.arange(steps.size) != coarsest
    reduced = _limit(steps[keep], values[keep])
    return value, float(np.abs(value - reduced))


def loglog_slope(x, y):
    """
    Slope of log(y) against log(x) from an ordinary least-squares fit.

    Args:
        x (array-like): Positive abscissae
        y (array-like): Positive ordinates

    Returns:
        float: Fitted exponent
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs positive data")

    model = LinearRegression()
    model.fit(np.log(x).reshape(-1, 1), np.log(y))
    return float(model.coef_[0])


def hermite_functions(n_max, x):
    """
    Normalized Hermite functions h_0..h_{n_max} by the stable recurrence.

    h_n(x) = sqrt(2/n) x h_{n-1}(x) - sqrt((n-1)/n) h_{n-2}(x), with
    h_0 = pi^{-1/4} exp(-x^2/2).

    Args:
        n_max (int): Highest index
        x (array-like): Evaluation points

    Returns:
        numpy.ndarray: Array of shape (n_max + 1,) + x.shape
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * x ** 2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, n_max + 1):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1.0) / n) * out[n - 2]
    return out
