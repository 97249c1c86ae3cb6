"""Reference trajectories for the unforced PDEs.

Heat and advection are solved exactly mode by mode.  Burgers and
diffusion-reaction are integrated pseudo-spectrally with classical RK4:
derivatives in Fourier space, products in physical space, optional
2/3-rule dealiasing of the nonlinear term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, InvalidArgumentError
from .grid import Grid
from .pde import Advection, Burgers, DiffusionReaction, Heat, PdeKind
from .spectral import WavenumberLadder, dealias_mask


@dataclass(frozen=True)
class IntegratorConfig:
    substeps_per_output: int = 8
    dealias: bool = True

    def __post_init__(self):
        if self.substeps_per_output < 1:
            raise InvalidArgumentError("substeps_per_output must be >= 1")


def _check_u0(u0, grid: Grid) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n_x,):
        raise InvalidArgumentError(f"initial condition has shape {u0.shape}, grid needs ({grid.n_x},)")
    return u0


def heat_exact(u0, nu: float, grid: Grid) -> np.ndarray:
    if nu <= 0:
        raise InvalidArgumentError("viscosity must be positive")
    u0 = _check_u0(u0, grid)
    k = WavenumberLadder(grid.n_x, grid.length_x).k
    decay = np.exp(-nu * np.outer(grid.t, k**2))
    return np.fft.irfft(np.fft.rfft(u0) * decay, n=grid.n_x, axis=-1)


def advection_exact(u0, c: float, grid: Grid) -> np.ndarray:
    u0 = _check_u0(u0, grid)
    k = WavenumberLadder(grid.n_x, grid.length_x).k
    phase = np.exp(-1j * c * np.outer(grid.t, k))
    return np.fft.irfft(np.fft.rfft(u0) * phase, n=grid.n_x, axis=-1)


def _rhs(pde: PdeKind, grid: Grid, dealias: bool):
    ladder = WavenumberLadder(grid.n_x, grid.length_x)
    ik = ladder.multiplier(1)
    lap = ladder.multiplier(2).real
    mask = dealias_mask(grid.n_x) if dealias else np.ones_like(lap)
    n_x = grid.n_x

    if isinstance(pde, Burgers):
        def rhs(uh):
            u = np.fft.irfft(uh * mask, n=n_x)
            # conservative form keeps the mean mode exactly untouched
            return pde.nu * lap * uh - 0.5 * ik * mask * np.fft.rfft(u * u)
    elif isinstance(pde, DiffusionReaction):
        def rhs(uh):
            u = np.fft.irfft(uh * mask, n=n_x)
            return pde.nu * lap * uh - uh + mask * np.fft.rfft(u * u * u)
    else:
        raise InvalidArgumentError(f"integrate supports burgers and diffusion_reaction, got {pde!r}")
    return rhs


def integrate(pde: PdeKind, u0, grid: Grid, cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    u0 = _check_u0(u0, grid)
    rhs = _rhs(pde, grid, cfg.dealias)
    h = grid.dt / cfg.substeps_per_output
    uh = np.fft.rfft(u0)
    out = np.empty(grid.shape)
    out[0] = u0
    step = 0
    # overflow is detected below and reported as BlowUpError
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, grid.n_t):
            for _ in range(cfg.substeps_per_output):
                k1 = rhs(uh)
                k2 = rhs(uh + 0.5 * h * k1)
                k3 = rhs(uh + 0.5 * h * k2)
                k4 = rhs(uh + h * k3)
                uh = uh + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                step += 1
                if not np.all(np.isfinite(uh)):
                    raise BlowUpError(step)
            out[n] = np.fft.irfft(uh, n=grid.n_x)
    return out


def reference_solution(pde: PdeKind, u0, grid: Grid, cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Dispatch to the exact or numerical reference for ``pde``."""
    if isinstance(pde, (Burgers, DiffusionReaction)):
        return integrate(pde, u0, grid, cfg)
    if isinstance(pde, Advection):
        return advection_exact(u0, pde.c, grid)
    if isinstance(pde, Heat):
        return heat_exact(u0, pde.nu, grid)
    raise InvalidArgumentError(f"no reference solver for {pde!r}")
