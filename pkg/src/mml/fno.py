"""Fourier neural operator over the ``(t, x)`` plane, plus checkpoint I/O.

Architecture::

    lift (4 -> width) -> L x [spectral conv + 1x1 bypass, gelu except last]
                      -> 1x1 (width -> lift_hidden) -> gelu -> 1x1 (-> 1)
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import BadMagicError, InvalidArgumentError, TruncatedPayloadError, VersionMismatchError
from .grid import Grid
from .pde import PdeKind, pde_from_id

IN_CHANNELS = 4


@dataclass(frozen=True)
class FnoConfig:
    n_layers: int = 4
    width: int = 64
    modes_t: int = 40
    modes_x: int = 40
    lift_hidden: int = 128
    init_seed: int = 0

    def __post_init__(self):
        if self.n_layers < 1 or self.width < 1 or self.lift_hidden < 1:
            raise InvalidArgumentError("n_layers, width and lift_hidden must be >= 1")
        if self.modes_t < 1 or self.modes_x < 1:
            raise InvalidArgumentError("mode counts must be >= 1")

    def check_grid(self, n_t: int, n_x: int):
        ad.check_modes(n_t, n_x, self.modes_t, self.modes_x)

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter names and shapes, in checkpoint order."""
        w = self.width
        shapes = {"lift.w": (w, IN_CHANNELS), "lift.b": (w,)}
        spectral = (w, w, 2 * self.modes_t, self.modes_x)
        for layer in range(self.n_layers):
            shapes[f"layer{layer}.spec_re"] = spectral
            shapes[f"layer{layer}.spec_im"] = spectral
            shapes[f"layer{layer}.w"] = (w, w)
            shapes[f"layer{layer}.b"] = (w,)
        shapes["proj1.w"] = (self.lift_hidden, w)
        shapes["proj1.b"] = (self.lift_hidden,)
        shapes["proj2.w"] = (1, self.lift_hidden)
        shapes["proj2.b"] = (1,)
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes().values())


@dataclass
class Normalization:
    """Per-channel affine map applied to inputs before the lift."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(IN_CHANNELS))
    std: np.ndarray = field(default_factory=lambda: np.ones(IN_CHANNELS))

    @classmethod
    def fit(cls, inputs: np.ndarray) -> "Normalization":
        axes = (0, 2, 3)
        std = inputs.std(axis=axes)
        return cls(inputs.mean(axis=axes), np.where(std > 0, std, 1.0))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean[:, None, None]) / self.std[:, None, None]


@dataclass
class FnoParams:
    config: FnoConfig
    arrays: dict[str, np.ndarray]
    normalization: Normalization | None = None

    def copy(self) -> "FnoParams":
        norm = None
        if self.normalization is not None:
            norm = Normalization(self.normalization.mean.copy(), self.normalization.std.copy())
        return FnoParams(self.config, {k: v.copy() for k, v in self.arrays.items()}, norm)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays.values()])

    def __eq__(self, other):
        if not isinstance(other, FnoParams) or other.config != self.config:
            return NotImplemented if not isinstance(other, FnoParams) else False
        same_norm = (self.normalization is None) == (other.normalization is None)
        if same_norm and self.normalization is not None:
            same_norm = np.array_equal(self.normalization.mean, other.normalization.mean) and np.array_equal(
                self.normalization.std, other.normalization.std
            )
        return same_norm and all(np.array_equal(self.arrays[k], other.arrays[k]) for k in self.arrays)


def init_params(config: FnoConfig) -> FnoParams:
    """Uniform fan-in init for 1x1 mixings; spectral weights are
    ``U[0, 1) / width**2`` for both real and imaginary parts."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.init_seed)))
    arrays = {}
    spectral_scale = 1.0 / (config.width * config.width)
    fan_in = {}
    for name, shape in config.param_shapes().items():
        if name.endswith((".spec_re", ".spec_im")):
            arrays[name] = spectral_scale * rng.random(shape)
            continue
        layer = name.rsplit(".", 1)[0]
        if name.endswith(".w"):
            fan_in[layer] = shape[1]
        bound = 1.0 / np.sqrt(fan_in[layer])
        arrays[name] = rng.uniform(-bound, bound, size=shape)
    return FnoParams(config, arrays)


def spectral_conv(h, w_re, w_im, modes_t: int, modes_x: int):
    n_t, n_x = h.shape[-2:]
    z = ad.rfft2_trunc(h, modes_t, modes_x)
    return ad.irfft2_pad(ad.mode_mix(z, w_re, w_im), n_t, n_x, modes_t)


def forward_tensors(params: dict, x, config: FnoConfig):
    """Differentiable forward pass; ``params`` maps names to tensors.

    ``x`` has shape ``(4, n_t, n_x)`` or ``(batch, 4, n_t, n_x)``.
    """
    x = ad.as_tensor(x)
    if x.value.ndim not in (3, 4) or x.shape[-3] != IN_CHANNELS:
        raise InvalidArgumentError(f"expected input (..., {IN_CHANNELS}, n_t, n_x), got {x.shape}")
    config.check_grid(*x.shape[-2:])
    h = ad.channel_mix(x, params["lift.w"], params["lift.b"])
    for layer in range(config.n_layers):
        p = f"layer{layer}."
        h = ad.add(
            spectral_conv(h, params[p + "spec_re"], params[p + "spec_im"], config.modes_t, config.modes_x),
            ad.channel_mix(h, params[p + "w"], params[p + "b"]),
        )
        if layer < config.n_layers - 1:
            h = ad.gelu(h)
    h = ad.gelu(ad.channel_mix(h, params["proj1.w"], params["proj1.b"]))
    return ad.channel_mix(h, params["proj2.w"], params["proj2.b"])


def prepare_input(params: FnoParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return params.normalization(x) if params.normalization is not None else x


def forward(params: FnoParams, x: np.ndarray) -> np.ndarray:
    """Untracked prediction, shape ``(1, n_t, n_x)`` (or batched)."""
    consts = {k: ad.Tensor(v) for k, v in params.arrays.items()}
    return forward_tensors(consts, prepare_input(params, x), params.config).value


# -- checkpoints ----------------------------------------------------------------

CKPT_MAGIC = b"MMLCKPT1"
CKPT_VERSION = 1
# magic, version, n_layers, width, modes_t, modes_x, lift_hidden, init_seed,
# n_t, n_x, length_x, horizon_t, pde_id, pde_param, normalized, n_params
CKPT_HEADER = struct.Struct("<8s6IQ2I2dId2IQ")


@dataclass
class Checkpoint:
    params: FnoParams
    grid: Grid
    pde: PdeKind


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    p, c, g = ckpt.params, ckpt.params.config, ckpt.grid
    norm = p.normalization
    flat = p.flat()
    head = CKPT_HEADER.pack(
        CKPT_MAGIC, CKPT_VERSION, c.n_layers, c.width, c.modes_t, c.modes_x, c.lift_hidden, c.init_seed,
        g.n_t, g.n_x, g.length_x, g.horizon_t, ckpt.pde.pde_id, float(ckpt.pde.param),
        int(norm is not None), 0, flat.size,
    )
    body = b""
    if norm is not None:
        body += np.concatenate([norm.mean, norm.std]).astype("<f8").tobytes()
    return head + body + flat.astype("<f8").tobytes()


def save_checkpoint(ckpt: Checkpoint, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(ckpt))


def decode_checkpoint(buf: bytes) -> Checkpoint:
    if buf[:8] != CKPT_MAGIC:
        raise BadMagicError(f"not a checkpoint file (magic {bytes(buf[:8])!r})")
    if len(buf) < CKPT_HEADER.size:
        raise TruncatedPayloadError("checkpoint header is truncated")
    (_, version, n_layers, width, modes_t, modes_x, lift_hidden, seed, n_t, n_x, length_x, horizon_t,
     pde_id, pde_param, normalized, _reserved, n_params) = CKPT_HEADER.unpack_from(buf)
    if version != CKPT_VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, expected {CKPT_VERSION}")
    config = FnoConfig(n_layers, width, modes_t, modes_x, lift_hidden, seed)
    if n_params != config.param_count():
        raise InvalidArgumentError(f"checkpoint holds {n_params} parameters, config needs {config.param_count()}")
    n_norm = 2 * IN_CHANNELS if normalized else 0
    expected = CKPT_HEADER.size + 8 * (n_norm + n_params)
    if len(buf) != expected:
        raise TruncatedPayloadError(f"checkpoint should be {expected} bytes, got {len(buf)}")
    values = np.frombuffer(buf, dtype="<f8", offset=CKPT_HEADER.size).astype(float)
    norm = None
    if normalized:
        norm = Normalization(values[:IN_CHANNELS].copy(), values[IN_CHANNELS:n_norm].copy())
    arrays, pos = {}, n_norm
    for name, shape in config.param_shapes().items():
        size = int(np.prod(shape))
        arrays[name] = values[pos : pos + size].reshape(shape).copy()
        pos += size
    return Checkpoint(FnoParams(config, arrays, norm), Grid(n_x, n_t, length_x, horizon_t), pde_from_id(pde_id, pde_param))


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
