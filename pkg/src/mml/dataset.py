"""Manufactured datasets ``(f, X, T, U0) -> u`` and their binary file format.

Layout (little-endian, no padding)::

    magic            8s   b"MMLDATA1"
    format_version   u32  1
    pde_id           u32  0 heat, 1 advection, 2 burgers, 3 diffusion-reaction
    derivative_mode  u32  0 discrete, 1 analytic
    n_samples        u32
    n_t, n_x         u32, u32
    n_in_channels    u32  4
    pde_param        f64  nu, or c for advection
    length_x         f64
    horizon_t        f64
    base_seed        u64
    K_x, K_t, k_max  u32 x 3
    omega_max        f64
    a_min, a_max     f64 x 2
    b_min, b_max     f64 x 2
    payload          f64, per sample: f, X, T, U0, u; each (n_t, n_x) row-major
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    InvalidArgumentError,
    ShapeOverflowError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .grid import Grid, coordinate_channels
from .manufactured import ManufacturedSpec, evaluate, sample_field
from .pde import DerivativeMode, PdeKind, manufactured_forcing, pde_from_id

MAGIC = b"MMLDATA1"
FORMAT_VERSION = 1
N_IN_CHANNELS = 4
HEADER = struct.Struct("<8s7I3dQ3I5d")

# channel order of the input tensor
F, X, T, U0 = range(4)


@dataclass(frozen=True)
class Sample:
    input: np.ndarray  # (4, n_t, n_x): f, X, T, U0
    target: np.ndarray  # (1, n_t, n_x)


@dataclass
class Dataset:
    grid: Grid
    pde: PdeKind
    spec: ManufacturedSpec
    derivative_mode: DerivativeMode
    inputs: np.ndarray  # (n_samples, 4, n_t, n_x)
    targets: np.ndarray  # (n_samples, 1, n_t, n_x)
    first_index: int = 0  # sample index of inputs[0] in the manufactured stream

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.inputs[i], self.targets[i])

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]

    def nbytes(self) -> int:
        return HEADER.size + self.inputs.nbytes + self.targets.nbytes


def assemble_input(forcing: np.ndarray, u0: np.ndarray, grid: Grid) -> np.ndarray:
    """Stack ``(f, X, T, U0)`` into a ``(4, n_t, n_x)`` input tensor."""
    Xc, Tc = coordinate_channels(grid)
    return np.stack([forcing, Xc, Tc, np.broadcast_to(u0, grid.shape)])


def build_dataset(
    spec: ManufacturedSpec,
    pde: PdeKind,
    grid: Grid,
    n_samples: int,
    mode: DerivativeMode = DerivativeMode.DISCRETE,
    first_index: int = 0,
) -> Dataset:
    """Manufacture ``n_samples`` triplets from stream indices
    ``first_index, first_index + 1, ...``."""
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be positive")
    inputs = np.empty((n_samples, N_IN_CHANNELS) + grid.shape)
    targets = np.empty((n_samples, 1) + grid.shape)
    Xc, Tc = coordinate_channels(grid)
    for i in range(n_samples):
        field = sample_field(spec, first_index + i)
        u = evaluate(field, grid)
        inputs[i, F] = manufactured_forcing(field, pde, grid, mode)
        inputs[i, X] = Xc
        inputs[i, T] = Tc
        inputs[i, U0] = u[0]
        targets[i, 0] = u
    return Dataset(grid, pde, spec, DerivativeMode(mode), inputs, targets, first_index)


def _header_bytes(d: Dataset) -> bytes:
    s, g = d.spec, d.grid
    return HEADER.pack(
        MAGIC, FORMAT_VERSION, d.pde.pde_id, int(d.derivative_mode), len(d), g.n_t, g.n_x, N_IN_CHANNELS,
        float(d.pde.param), g.length_x, g.horizon_t,
        s.base_seed, s.k_x_terms, s.k_t_terms, s.k_max,
        s.omega_max, *s.amp_x_range, *s.amp_t_range,
    )


def dataset_bytes(d: Dataset) -> bytes:
    payload = np.concatenate([d.inputs, d.targets], axis=1)
    return _header_bytes(d) + payload.astype("<f8", copy=False).tobytes(order="C")


def write_dataset(d: Dataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dataset_bytes(d))


def decode_dataset(buf: bytes) -> Dataset:
    if len(buf) < len(MAGIC) or buf[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"not a dataset file (magic {bytes(buf[:8])!r})")
    if len(buf) < HEADER.size:
        raise TruncatedPayloadError(f"header needs {HEADER.size} bytes, file has {len(buf)}")
    (_, version, pde_id, mode, n_samples, n_t, n_x, n_in, param, length_x, horizon_t,
     seed, kx, kt, kmax, omega_max, a_min, a_max, b_min, b_max) = HEADER.unpack_from(buf)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version}, expected {FORMAT_VERSION}")
    if n_in != N_IN_CHANNELS:
        raise ShapeOverflowError(f"header declares {n_in} input channels, expected {N_IN_CHANNELS}")
    n_values = n_samples * (n_in + 1) * n_t * n_x
    if n_values * 8 > 2**62:
        raise ShapeOverflowError(f"declared shape ({n_samples}, {n_in + 1}, {n_t}, {n_x}) is too large")
    expected = HEADER.size + 8 * n_values
    if len(buf) < expected:
        raise TruncatedPayloadError(f"payload needs {expected} bytes, file has {len(buf)}")
    if len(buf) > expected:
        raise ShapeOverflowError(f"{len(buf) - expected} trailing bytes beyond declared shape")
    grid = Grid(n_x, n_t, length_x, horizon_t)
    spec = ManufacturedSpec(kx, kt, kmax, omega_max, (a_min, a_max), (b_min, b_max), seed)
    payload = np.frombuffer(buf, dtype="<f8", count=n_values, offset=HEADER.size)
    payload = payload.astype(float).reshape(n_samples, n_in + 1, n_t, n_x)
    return Dataset(
        grid, pde_from_id(pde_id, param), spec, DerivativeMode(mode),
        np.ascontiguousarray(payload[:, :n_in]), np.ascontiguousarray(payload[:, n_in:]),
    )


def read_dataset(path: str | os.PathLike) -> Dataset:
    with open(path, "rb") as fh:
        return decode_dataset(fh.read())
