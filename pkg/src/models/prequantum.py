import logging

import numpy as np

from src.data.states import SQRT_DQ, SQRT_DU, SQRT_DZ
from src.models.kahler import FirstTypeFamily, SecondTypeFamily
from src.models.phase_space import potential_contraction
from src.utils.errors import UnsupportedOperatorError
from src.utils.numerics import fd_derivative, stencil_width, trim


def _hamiltonian_data(f_spec, q, p):
    """Value of f and Cartesian components of X_f = f_p ∂_q - f_q ∂_p."""
    h = 0.5 * (q * q + p * p)
    if f_spec == "p":
        return p, np.ones_like(q), np.zeros_like(q)
    if f_spec == "q":
        return q, np.zeros_like(q), -np.ones_like(q)
    if f_spec == "h1":
        return FirstTypeFamily.complexifier(q, p), p, np.zeros_like(q)
    if f_spec == "h":
        return h, p, -q
    if f_spec == "h2":
        # X_{h2} = h X_h
        return SecondTypeFamily.regulator(h), h * p, -h * q
    raise UnsupportedOperatorError(f"no closed-form prequantum operator for f = {f_spec!r}")


# Frames whose half-form Lie derivative is carried by the frame itself:
# the flow of X_f moves the frame into the frame of the same family, so the
# scalar part only sees the prequantum term.
COMOVING_FRAMES = {
    SQRT_DQ: ("p", "q", "h1"),
    SQRT_DZ: ("p", "q", "h1"),
    SQRT_DU: ("h", "h2"),
}


class PrequantumOperator:
    """
    Prequantum operator f̂ = iħ X_f - (Θ(X_f) - f) on section scalars.

    The half-form term iħ 1 ⊗ L_{X_f} is accounted for by the frame label of
    the sample (see COMOVING_FRAMES) and does not alter the scalar.
    """

    def __init__(self, f_spec, params=None):
        """
        Args:
            f_spec (str): One of 'p', 'q', 'h1', 'h', 'h2'
            params (dict, optional): 'fd_order' (2 or 4)
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        _hamiltonian_data(f_spec, np.zeros(1), np.zeros(1))
        params = params or {}
        self.f_spec = f_spec
        self.fd_order = params.get("fd_order", 4)

    def lagrangian(self, trivialization, q, p):
        """L_f = Θ(X_f) - f in the given trivialization"""
        f, x_q, x_p = _hamiltonian_data(self.f_spec, q, p)
        return potential_contraction(trivialization, q, p, x_q, x_p) - f

    def apply(self, sample):
        """
        Apply the operator to a sample in its own trivialization.

        Args:
            sample (PolarizedSectionSample): Scalar samples on ('q','p') or
                ('h','theta') axes

        Returns:
            PolarizedSectionSample: Result on the interior of the grid
        """
        allowed = COMOVING_FRAMES.get(sample.halfform_label, ())
        if self.f_spec not in allowed:
            raise UnsupportedOperatorError(
                f"f = {self.f_spec!r} has no closed-form half-form factor on frame {sample.halfform_label}"
            )

        width = stencil_width(self.fd_order)
        values = sample.values
        d0 = trim(fd_derivative(values, sample.spacing(0), axis=0, order=self.fd_order), width, axes=(1,))
        d1 = trim(fd_derivative(values, sample.spacing(1), axis=1, order=self.fd_order), width, axes=(0,))
        inner = sample.interior(width)
        q, p = inner.mesh_qp()
        _, x_q, x_p = _hamiltonian_data(self.f_spec, q, p)

        if sample.axes == ("q", "p"):
            c0, c1 = x_q, x_p
        else:
            # dh(X) = q X_q + p X_p, dθ(X) = (q X_p - p X_q)/r²
            c0 = q * x_q + p * x_p
            c1 = (q * x_p - p * x_q) / (q * q + p * p)

        derivative = c0 * d0 + c1 * d1
        result = 1j * sample.hbar * derivative - self.lagrangian(sample.trivialization, q, p) * inner.values
        self.logger.debug("applied %s to %s sample of shape %s", self.f_spec, sample.axes, values.shape)
        return inner.with_values(result)


def prequantum_op(f_spec, section, fd_order=4):
    """Apply the prequantum operator of ``f_spec`` to a section sample."""
    return PrequantumOperator(f_spec, {"fd_order": fd_order}).apply(section)
