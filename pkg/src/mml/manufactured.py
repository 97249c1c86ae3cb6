"""Separable Fourier trial solutions

    u(x, t) = s * sum_i sum_j A_i B_j sin(k_i x + phi_i) sin(w_j t + psi_j)

sampled from a seeded counter-based stream, plus closed-form derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import Grid

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class ManufacturedSpec:
    k_x_terms: int = 4
    k_t_terms: int = 4
    k_max: int = 8
    omega_max: float = 8.0
    amp_x_range: tuple[float, float] = (0.2, 1.0)
    amp_t_range: tuple[float, float] = (0.2, 1.0)
    base_seed: int = 0

    def __post_init__(self):
        if self.k_x_terms < 1 or self.k_t_terms < 1:
            raise InvalidArgumentError("term counts must be >= 1")
        if self.k_max < 1:
            raise InvalidArgumentError("k_max must be >= 1")
        if self.omega_max < 1:
            raise InvalidArgumentError("omega_max must be >= 1")
        for lo, hi in (self.amp_x_range, self.amp_t_range):
            if not 0 < lo <= hi:
                raise InvalidArgumentError(f"amplitude range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if not 0 <= self.base_seed < 2**64:
            raise InvalidArgumentError("base_seed must fit in 64 unsigned bits")

    @property
    def term_scale(self) -> float:
        # keeps |u| = O(1) regardless of the number of terms
        return 1.0 / (self.k_x_terms * self.k_t_terms)


@dataclass(frozen=True)
class ManufacturedField:
    """Coefficients of one trial solution.

    ``spatial_terms`` holds rows ``(A_i, k_i, phi_i)``, ``temporal_terms``
    rows ``(B_j, omega_j, psi_j)``; ``scale`` multiplies the whole sum.
    """

    spatial_terms: np.ndarray
    temporal_terms: np.ndarray
    scale: float = 1.0

    @classmethod
    def single(cls, A=1.0, k=1, phi=0.0, B=1.0, omega=1.0, psi=0.0) -> "ManufacturedField":
        return cls(np.array([[A, k, phi]], dtype=float), np.array([[B, omega, psi]], dtype=float))

    @property
    def k_max(self) -> int:
        return int(np.max(self.spatial_terms[:, 1]))

    def amplitude_bound(self) -> float:
        return abs(self.scale) * np.abs(self.spatial_terms[:, 0]).sum() * np.abs(self.temporal_terms[:, 0]).sum()


def _stream(base_seed: int, sample_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(sample_index),))
    return np.random.Generator(np.random.Philox(seq))


def sample_field(spec: ManufacturedSpec, sample_index: int) -> ManufacturedField:
    """Draw the trial solution for ``sample_index``.

    Each index owns an independent Philox stream keyed by
    ``(base_seed, sample_index)``; draws happen in the fixed order
    A, k, phi, B, omega, psi.
    """
    if sample_index < 0:
        raise InvalidArgumentError("sample_index must be non-negative")
    rng = _stream(spec.base_seed, sample_index)
    nx, nt = spec.k_x_terms, spec.k_t_terms
    A = rng.uniform(*spec.amp_x_range, size=nx)
    k = rng.integers(1, spec.k_max + 1, size=nx)
    phi = rng.uniform(0.0, TWO_PI, size=nx)
    B = rng.uniform(*spec.amp_t_range, size=nt)
    omega = rng.uniform(1.0, spec.omega_max, size=nt)
    psi = rng.uniform(0.0, TWO_PI, size=nt)
    return ManufacturedField(
        np.stack([A, k.astype(float), phi], axis=1),
        np.stack([B, omega, psi], axis=1),
        spec.term_scale,
    )


def _spatial_factor(field: ManufacturedField, x: np.ndarray, order: int = 0) -> np.ndarray:
    A, k, phi = field.spatial_terms.T
    # d^n/dx^n sin(kx + phi) = k^n sin(kx + phi + n*pi/2)
    arg = np.outer(x, k) + phi + order * (math.pi / 2)
    return np.sin(arg) @ (A * k**order)


def _temporal_factor(field: ManufacturedField, t: np.ndarray, order: int = 0) -> np.ndarray:
    B, omega, psi = field.temporal_terms.T
    arg = np.outer(t, omega) + psi + order * (math.pi / 2)
    return np.sin(arg) @ (B * omega**order)


def evaluate(field: ManufacturedField, grid: Grid) -> np.ndarray:
    """u on the grid, shape ``(n_t, n_x)``; the double sum factorises."""
    return field.scale * np.outer(_temporal_factor(field, grid.t), _spatial_factor(field, grid.x))


def evaluate_dt(field: ManufacturedField, grid: Grid) -> np.ndarray:
    return field.scale * np.outer(_temporal_factor(field, grid.t, 1), _spatial_factor(field, grid.x))


def evaluate_dx(field: ManufacturedField, grid: Grid, order: int = 1) -> np.ndarray:
    if order not in (1, 2):
        raise InvalidArgumentError(f"analytic spatial derivative supports order 1 or 2, got {order!r}")
    return field.scale * np.outer(_temporal_factor(field, grid.t), _spatial_factor(field, grid.x, order))
