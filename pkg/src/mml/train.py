"""Composite-loss training of the neural operator on manufactured data."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .dataset import U0, Dataset, F
from .errors import DivergedError, InvalidArgumentError
from .fno import FnoConfig, FnoParams, Normalization, forward, forward_tensors, init_params, prepare_input
from .grid import Grid
from .pde import PdeKind, residual_of_prediction

log = logging.getLogger(__name__)

LOSS_PARTS = ("l_data", "l_phys", "l_ic", "l_bc")
HISTORY_HEADER = ("epoch",) + LOSS_PARTS + ("total", "val_rel_l2")


@dataclass(frozen=True)
class LossWeights:
    lambda_phys: float = 0.1
    lambda_ic: float = 1.0
    lambda_bc: float = 1.0

    def __post_init__(self):
        if min(self.lambda_phys, self.lambda_ic, self.lambda_bc) < 0:
            raise InvalidArgumentError("loss weights must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 16
    learning_rate: float = 1e-3
    lr_decay: float = 0.5
    lr_decay_every: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    normalize: bool = False
    log_every: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidArgumentError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0 or self.lr_decay_every < 1:
            raise InvalidArgumentError("learning_rate and lr_decay_every must be positive")

    def lr_at(self, epoch: int) -> float:
        return self.learning_rate * self.lr_decay ** (epoch // self.lr_decay_every)


@dataclass
class EpochRecord:
    epoch: int
    l_data: float
    l_phys: float
    l_ic: float
    l_bc: float
    total: float
    val_rel_l2: float


class TrainHistory(list):
    """One :class:`EpochRecord` per epoch."""

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HISTORY_HEADER)
            for r in self:
                writer.writerow([r.epoch] + [repr(float(getattr(r, k))) for k in HISTORY_HEADER[1:]])

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "TrainHistory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(EpochRecord(int(r["epoch"]), *(float(r[k]) for k in HISTORY_HEADER[1:])) for r in rows)


def composite_loss(pred, inputs: np.ndarray, target: np.ndarray, pde: PdeKind, grid: Grid,
                   weights: LossWeights = LossWeights()):
    """Data, physics, initial and periodicity terms, each a mean over points.

    ``pred`` is a tensor of shape ``(..., 1, n_t, n_x)``; ``inputs`` and
    ``target`` are the matching raw (unnormalised) sample arrays.
    Returns ``(total, parts)`` where ``parts`` maps names to scalar tensors.
    """
    pred = ad.as_tensor(pred)
    inputs = np.asarray(inputs)
    forcing = inputs[..., F : F + 1, :, :]
    u0_row = inputs[..., U0 : U0 + 1, 0:1, :]
    parts = {
        "l_data": ad.mean(ad.square(pred - target)),
        "l_phys": ad.mean(ad.square(residual_of_prediction(pde, pred, grid) - forcing)),
        "l_ic": ad.mean(ad.square(ad.slice_time(pred, 0) - u0_row)),
        "l_bc": ad.mean(ad.square(ad.wrap_difference(pred))),
    }
    total = parts["l_data"]
    for name, lam in (("l_phys", weights.lambda_phys), ("l_ic", weights.lambda_ic), ("l_bc", weights.lambda_bc)):
        if lam:
            total = total + ad.scale(parts[name], lam)
    return total, parts


def loss_and_grads(params: FnoParams, inputs, target, pde, grid, weights):
    """Forward and backward on one batch; returns ``(total, parts, grads)``."""
    leaves = {k: ad.Tensor(v, requires_grad=True, name=k) for k, v in params.arrays.items()}
    pred = forward_tensors(leaves, prepare_input(params, inputs), params.config)
    total, parts = composite_loss(pred, inputs, target, pde, grid, weights)
    grads = ad.backward(total, list(leaves.values()))
    return total.item(), {k: v.item() for k, v in parts.items()}, dict(zip(leaves, grads))


def dataset_loss(params: FnoParams, data: Dataset, weights: LossWeights, batch_size: int = 16):
    """Mean composite loss over a whole dataset, without gradients."""
    acc = dict.fromkeys(LOSS_PARTS + ("total",), 0.0)
    n = len(data)
    for start in range(0, n, batch_size):
        sl = slice(start, start + batch_size)
        pred = forward(params, data.inputs[sl])
        total, parts = composite_loss(pred, data.inputs[sl], data.targets[sl], data.pde, data.grid, weights)
        frac = data.inputs[sl].shape[0] / n
        acc["total"] += frac * total.item()
        for k in LOSS_PARTS:
            acc[k] += frac * parts[k].item()
    return acc


def predict(params: FnoParams, inputs: np.ndarray, batch_size: int = 16) -> np.ndarray:
    return np.concatenate([forward(params, inputs[s : s + batch_size]) for s in range(0, len(inputs), batch_size)])


def mean_relative_l2(params: FnoParams, data: Dataset, batch_size: int = 16) -> float:
    """Average over samples of the per-sample relative L2 error, in percent."""
    pred = predict(params, data.inputs, batch_size)
    axes = tuple(range(1, pred.ndim))
    err = np.sqrt(((pred - data.targets) ** 2).sum(axis=axes))
    ref = np.sqrt((data.targets**2).sum(axis=axes))
    return float(100.0 * np.mean(err / ref))


class Adam:
    def __init__(self, params: dict[str, np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _check_compatible(data: Dataset, val: Dataset | None):
    if val is None:
        return
    if val.grid != data.grid:
        raise InvalidArgumentError(f"validation grid {val.grid} differs from training grid {data.grid}")
    if val.pde != data.pde:
        raise InvalidArgumentError(f"validation pde {val.pde} differs from training pde {data.pde}")


def train(data: Dataset, val: Dataset | None, model_config: FnoConfig, cfg: TrainConfig = TrainConfig(),
          params: FnoParams | None = None, on_epoch=None):
    """Mini-batch Adam on the composite loss.

    Returns the parameters with the best validation relative L2 (the final
    ones when ``val`` is None) and the per-epoch history.
    """
    _check_compatible(data, val)
    model_config.check_grid(data.grid.n_t, data.grid.n_x)
    if params is None:
        params = init_params(model_config)
        if cfg.normalize:
            params.normalization = Normalization.fit(data.inputs)
    opt = Adam(params.arrays, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    history = TrainHistory()
    best, best_score = params.copy(), math.inf
    n = len(data)
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = rng.permutation(n)
        sums = dict.fromkeys(LOSS_PARTS + ("total",), 0.0)
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = np.sort(order[start : start + cfg.batch_size])
            total, parts, grads = loss_and_grads(
                params, data.inputs[idx], data.targets[idx], data.pde, data.grid, cfg.weights
            )
            if not math.isfinite(total):
                raise DivergedError(epoch, batch, total)
            opt.step(params.arrays, grads, lr)
            frac = len(idx) / n
            sums["total"] += frac * total
            for k in LOSS_PARTS:
                sums[k] += frac * parts[k]
        score = mean_relative_l2(params, val, cfg.batch_size) if val is not None else math.nan
        record = EpochRecord(epoch + 1, sums["l_data"], sums["l_phys"], sums["l_ic"], sums["l_bc"], sums["total"], score)
        history.append(record)
        if val is None or score < best_score:
            best, best_score = params.copy(), score if val is not None else best_score
        if cfg.log_every and (epoch + 1) % cfg.log_every == 0:
            log.info(
                "epoch %d  total %.4e  data %.3e  phys %.3e  ic %.3e  bc %.3e  val %.3f%%",
                record.epoch, record.total, record.l_data, record.l_phys, record.l_ic, record.l_bc, score,
            )
        if on_epoch is not None:
            on_epoch(record)
    return best, history
