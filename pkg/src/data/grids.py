import copy
import logging
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ConfigError

TWO_PI = 2.0 * np.pi
MIN_GRID_COUNT = 16

DEFAULT_PARAMS = {
    "hbar": 1.0,
    "q_grid": {"min": -12.0, "max": 12.0, "count": 512},
    "p_grid": {"min": -12.0, "max": 12.0, "count": 512},
    "h_grid": {"min": 0.05, "max": 8.0, "count": 256},
    "theta_grid": {"min": 0.0, "max": TWO_PI, "count": 256},
    "quad_tol": 1e-10,
    "fd_order": 4,
}


@dataclass(frozen=True)
class UniformGrid:
    """
    Uniform one-dimensional grid.

    A periodic grid covers [start, stop) without the duplicated endpoint.
    """

    start: float
    stop: float
    count: int
    periodic: bool = False

    def __post_init__(self):
        if not np.isfinite(self.start) or not np.isfinite(self.stop) or self.stop <= self.start:
            raise ConfigError(f"grid bounds must satisfy min < max, got [{self.start}, {self.stop}]")
        if int(self.count) != self.count or self.count < MIN_GRID_COUNT:
            raise ConfigError(f"grid count must be an integer >= {MIN_GRID_COUNT}, got {self.count}")

    @property
    def points(self):
        if self.periodic:
            return self.start + (self.stop - self.start) * np.arange(self.count) / self.count
        return np.linspace(self.start, self.stop, self.count)

    @property
    def spacing(self):
        if self.periodic:
            return (self.stop - self.start) / self.count
        return (self.stop - self.start) / (self.count - 1)

    def to_dict(self):
        return {"min": self.start, "max": self.stop, "count": self.count}

    @classmethod
    def from_dict(cls, spec, periodic=False):
        if not isinstance(spec, dict):
            raise ConfigError(f"grid descriptor must be a mapping, got {spec!r}")
        try:
            return cls(float(spec["min"]), float(spec["max"]), int(spec["count"]), periodic)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid grid descriptor {spec!r}: {exc}") from exc


class QuantConfig:
    """
    Global numeric configuration: Planck constant, sampling grids and tolerances.

    The symplectic form is ω = dq∧dp and the symplectic potential Θ = p dq
    throughout; neither is configurable.
    """

    def __init__(self, params=None):
        """
        Initialize and validate the configuration.

        Args:
            params (dict, optional): Overrides of DEFAULT_PARAMS. Grid entries
                are dicts with 'min', 'max' and 'count'.
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        merged = copy.deepcopy(DEFAULT_PARAMS)
        if params:
            unknown = set(params) - set(DEFAULT_PARAMS)
            if unknown:
                raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
            for key, value in params.items():
                if isinstance(merged[key], dict) and isinstance(value, dict):
                    merged[key].update(value)
                else:
                    merged[key] = value

        try:
            self.hbar = float(merged["hbar"])
            self.quad_tol = float(merged["quad_tol"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"hbar and quad_tol must be numbers: {exc}") from exc

        if not np.isfinite(self.hbar) or self.hbar <= 0:
            raise ConfigError(f"hbar must be positive, got {merged['hbar']}")
        if not 0 < self.quad_tol < 1:
            raise ConfigError(f"quad_tol must lie in (0, 1), got {self.quad_tol}")
        # JSON may deliver 4.0; stencils need an int
        fd_order = merged["fd_order"]
        if isinstance(fd_order, bool) or not isinstance(fd_order, (int, float)) or fd_order not in (2, 4):
            raise ConfigError(f"fd_order must be 2 or 4, got {fd_order!r}")
        self.fd_order = int(fd_order)

        self.q_grid = UniformGrid.from_dict(merged["q_grid"])
        self.p_grid = UniformGrid.from_dict(merged["p_grid"])
        self.h_grid = UniformGrid.from_dict(merged["h_grid"])
        theta = merged["theta_grid"]
        if not isinstance(theta, dict):
            raise ConfigError(f"invalid grid descriptor {theta!r}")
        if not (np.isclose(float(theta.get("min", 0.0)), 0.0) and np.isclose(float(theta.get("max", TWO_PI)), TWO_PI)):
            raise ConfigError("theta grid must span [0, 2π)")
        self.theta_grid = UniformGrid(0.0, TWO_PI, int(theta["count"]), periodic=True)
        if self.h_grid.start <= 0:
            raise ConfigError("h grid must exclude the elliptic fixed point (min > 0)")

        self.logger.debug("QuantConfig hbar=%g fd_order=%d", self.hbar, self.fd_order)

    def to_dict(self):
        """Plain-dict form suitable for JSON output"""
        return {
            "hbar": self.hbar,
            "q_grid": self.q_grid.to_dict(),
            "p_grid": self.p_grid.to_dict(),
            "h_grid": self.h_grid.to_dict(),
            "theta_grid": self.theta_grid.to_dict(),
            "quad_tol": self.quad_tol,
            "fd_order": self.fd_order,
        }

    def replace(self, **overrides):
        """Return a new validated configuration with some values replaced"""
        params = self.to_dict()
        for key, value in overrides.items():
            if isinstance(params.get(key), dict) and isinstance(value, dict):
                params[key] = {**params[key], **value}
            else:
                params[key] = value
        return QuantConfig(params)

    def __repr__(self):
        return f"QuantConfig(hbar={self.hbar}, fd_order={self.fd_order}, q={self.q_grid.count}, p={self.p_grid.count})"
