"""Governing operators P[u] = u_t + N(u, u_x, u_xx) for the four 1-D PDEs."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from . import autodiff as ad
from .errors import AliasingRiskError, InvalidArgumentError
from .grid import Grid
from .manufactured import ManufacturedField, evaluate, evaluate_dt, evaluate_dx
from .spectral import nyquist_check, spatial_derivative, time_derivative_fd


@dataclass(frozen=True)
class Heat:
    nu: float = 0.2
    pde_id: ClassVar[int] = 0
    name: ClassVar[str] = "heat"
    degree: ClassVar[int] = 1

    def __post_init__(self):
        if self.nu <= 0:
            raise InvalidArgumentError("viscosity must be positive")

    @property
    def param(self) -> float:
        return self.nu


@dataclass(frozen=True)
class Advection:
    c: float = 0.5
    pde_id: ClassVar[int] = 1
    name: ClassVar[str] = "advection"
    degree: ClassVar[int] = 1

    @property
    def param(self) -> float:
        return self.c


@dataclass(frozen=True)
class Burgers(Heat):
    nu: float = 0.05
    pde_id: ClassVar[int] = 2
    name: ClassVar[str] = "burgers"
    degree: ClassVar[int] = 2


@dataclass(frozen=True)
class DiffusionReaction(Heat):
    """u_t = nu u_xx - u + u^3, kept in residual form."""

    nu: float = 0.05
    pde_id: ClassVar[int] = 3
    name: ClassVar[str] = "diffusion_reaction"
    degree: ClassVar[int] = 3


PdeKind = Union[Heat, Advection, Burgers, DiffusionReaction]

PDE_TYPES = {cls.name: cls for cls in (Heat, Advection, Burgers, DiffusionReaction)}
PDE_BY_ID = {cls.pde_id: cls for cls in PDE_TYPES.values()}


def make_pde(name: str, param: float | None = None) -> PdeKind:
    """Build a PDE by name; ``param`` is nu (or c for advection)."""
    try:
        cls = PDE_TYPES[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown pde {name!r}; expected one of {sorted(PDE_TYPES)}") from None
    return cls() if param is None else cls(param)


def pde_from_id(pde_id: int, param: float) -> PdeKind:
    try:
        return PDE_BY_ID[pde_id](param)
    except KeyError:
        raise InvalidArgumentError(f"unknown pde id {pde_id}") from None


class DerivativeMode(enum.IntEnum):
    DISCRETE = 0
    ANALYTIC = 1


def apply(pde: PdeKind, u, u_t, u_x, u_xx):
    """Pointwise P[u] from precomputed derivatives.

    Works on numpy arrays and on :class:`~mml.autodiff.Tensor` alike.
    """
    shapes = {np.shape(a.value if isinstance(a, ad.Tensor) else a) for a in (u, u_t, u_x, u_xx)}
    if len(shapes) != 1:
        raise InvalidArgumentError(f"apply: derivative arrays differ in shape {sorted(shapes)}")
    if isinstance(pde, Advection):
        return u_t + pde.c * u_x
    if isinstance(pde, Burgers):
        return u_t + u * u_x - pde.nu * u_xx
    if isinstance(pde, DiffusionReaction):
        return u_t - pde.nu * u_xx + u - u * u * u
    if isinstance(pde, Heat):
        return u_t - pde.nu * u_xx
    raise InvalidArgumentError(f"unsupported pde {pde!r}")


def residual_of_prediction(pde: PdeKind, u_pred, grid: Grid):
    """Discrete P[u]: second-order FD in time, spectral in space.

    A :class:`~mml.autodiff.Tensor` input yields a differentiable result.
    """
    if isinstance(u_pred, ad.Tensor):
        u_t = ad.fd_time(u_pred, grid.dt)
        u_x = ad.spectral_dx(u_pred, 1, grid.length_x)
        u_xx = ad.spectral_dx(u_pred, 2, grid.length_x)
    else:
        u_pred = np.asarray(u_pred, dtype=float)
        u_t = time_derivative_fd(u_pred, grid.dt)
        u_x = spatial_derivative(u_pred, 1, grid.length_x)
        u_xx = spatial_derivative(u_pred, 2, grid.length_x)
    return apply(pde, u_pred, u_t, u_x, u_xx)


def manufactured_forcing(
    field: ManufacturedField,
    pde: PdeKind,
    grid: Grid,
    mode: DerivativeMode = DerivativeMode.DISCRETE,
) -> np.ndarray:
    """f = P[u] for a manufactured field."""
    u = evaluate(field, grid)
    if mode == DerivativeMode.ANALYTIC:
        return apply(pde, u, evaluate_dt(field, grid), evaluate_dx(field, grid, 1), evaluate_dx(field, grid, 2))
    if not nyquist_check(field.k_max, grid.n_x, pde.degree):
        raise AliasingRiskError(
            f"{pde.name}: degree-{pde.degree} products of modes up to k={field.k_max} alias on n_x={grid.n_x}"
        )
    return residual_of_prediction(pde, u, grid)
