"""Discrete space-time lattice on [0, length_x) x [0, horizon_t]."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic-in-space grid.

    Space nodes are endpoint-exclusive (``x_j = j * dx``), time levels are
    endpoint-inclusive so both ``t = 0`` and ``t = horizon_t`` are stored.
    """

    n_x: int = 128
    n_t: int = 128
    length_x: float = 2 * math.pi
    horizon_t: float = 1.0

    def __post_init__(self):
        if self.n_x < 8 or self.n_t < 8:
            raise InvalidArgumentError(f"grid needs n_x, n_t >= 8, got ({self.n_x}, {self.n_t})")
        if not (self.length_x > 0 and self.horizon_t > 0):
            raise InvalidArgumentError("grid extents must be positive")

    @property
    def dx(self) -> float:
        return self.length_x / self.n_x

    @property
    def dt(self) -> float:
        return self.horizon_t / (self.n_t - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_t, self.n_x)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x) * self.dx

    @property
    def t(self) -> np.ndarray:
        # linspace pins the last level to horizon_t exactly
        return np.linspace(0.0, self.horizon_t, self.n_t)

    def time_index(self, t: float) -> int:
        """Index of the stored time level nearest to ``t``."""
        return int(round(t / self.dt))


def coordinate_channels(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Return the ``(X, T)`` coordinate fields, each of shape ``(n_t, n_x)``."""
    T, X = np.meshgrid(grid.t, grid.x, indexing="ij")
    return X, T
