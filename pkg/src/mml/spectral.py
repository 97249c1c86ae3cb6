"""Fourier differentiation on periodic grids and finite differences in time.

All spatial operators act along the last axis, temporal ones along the
second-to-last axis, so ``(n_t, n_x)`` fields and batched
``(..., n_t, n_x)`` stacks are handled alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class WavenumberLadder:
    """Half-spectrum wavenumbers for an ``n_x``-point real transform."""

    n_x: int
    length_x: float = 2 * math.pi

    @property
    def scale(self) -> float:
        return 2 * math.pi / self.length_x

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.n_x // 2 + 1)

    @property
    def k(self) -> np.ndarray:
        return self.modes * self.scale

    def multiplier(self, order: int) -> np.ndarray:
        """``(i k)**order`` with the Nyquist bin zeroed for odd orders."""
        mult = (1j * self.k) ** order
        if order % 2 == 1 and self.n_x % 2 == 0:
            mult[-1] = 0.0
        return mult


@lru_cache(maxsize=64)
def _multiplier(n_x: int, order: int, length_x: float) -> np.ndarray:
    mult = WavenumberLadder(n_x, length_x).multiplier(order)
    mult.setflags(write=False)
    return mult


def spatial_derivative(row: np.ndarray, order: int = 1, length_x: float = 2 * math.pi) -> np.ndarray:
    """Spectral derivative of the trigonometric interpolant along the last axis."""
    if int(order) != order or order < 1:
        raise InvalidArgumentError(f"derivative order must be a positive integer, got {order!r}")
    row = np.asarray(row, dtype=float)
    n_x = row.shape[-1]
    coeffs = np.fft.rfft(row, axis=-1)
    return np.fft.irfft(coeffs * _multiplier(n_x, int(order), float(length_x)), n=n_x, axis=-1)


@lru_cache(maxsize=64)
def fd_time_matrix(n_t: int, dt: float) -> np.ndarray:
    """Second-order time-derivative stencil as an ``(n_t, n_t)`` matrix.

    Central differences in the interior, three-point one-sided stencils at
    both ends.
    """
    if n_t < 3:
        raise InvalidArgumentError("time differencing needs at least 3 levels")
    D = np.zeros((n_t, n_t))
    idx = np.arange(1, n_t - 1)
    D[idx, idx - 1] = -1.0
    D[idx, idx + 1] = 1.0
    D[0, :3] = (-3.0, 4.0, -1.0)
    D[-1, -3:] = (1.0, -4.0, 3.0)
    D /= 2.0 * dt
    D.setflags(write=False)
    return D


def time_derivative_fd(field: np.ndarray, dt: float) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    return fd_time_matrix(field.shape[-2], float(dt)) @ field


def nyquist_check(field_modes: int, n_x: int, nonlinearity_degree: int) -> bool:
    """True when degree-``p`` products of a field band-limited to
    ``field_modes`` stay strictly below the Nyquist index ``n_x / 2``."""
    return nonlinearity_degree * field_modes < n_x / 2


def dealias_mask(n_x: int) -> np.ndarray:
    """2/3-rule mask over the half spectrum: keeps ``k < n_x / 3``."""
    k = np.arange(n_x // 2 + 1)
    return (3 * k < n_x).astype(float)
