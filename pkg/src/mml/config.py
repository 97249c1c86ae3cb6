"""Flat ``key = value`` run configuration.

Every key has a default; unknown keys and malformed values are errors that
name the offending line.  ``#`` starts a comment anywhere on a line.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

from .errors import ConfigError, MMLError
from .fno import FnoConfig
from .grid import Grid
from .manufactured import ManufacturedSpec
from .pde import PDE_TYPES, DerivativeMode, PdeKind, make_pde
from .reference import IntegratorConfig
from .train import LossWeights, TrainConfig


@dataclass
class RunConfig:
    # problem
    pde: str = "heat"
    pde_param: float = math.nan  # nan: built-in default (nu, or c for advection)
    n_x: int = 128
    n_t: int = 128
    length_x: float = 2 * math.pi
    horizon_t: float = 1.0
    # manufactured space
    k_x_terms: int = 4
    k_t_terms: int = 4
    k_max: int = 8
    omega_max: float = 8.0
    a_min: float = 0.2
    a_max: float = 1.0
    b_min: float = 0.2
    b_max: float = 1.0
    base_seed: int = 0
    n_samples: int = 1024
    n_val_samples: int = 32
    derivative_mode: str = "discrete"
    # model
    n_layers: int = 4
    width: int = 64
    modes_t: int = 40
    modes_x: int = 40
    lift_hidden: int = 128
    init_seed: int = 0
    normalize: bool = False
    # optimisation
    epochs: int = 300
    batch_size: int = 16
    learning_rate: float = 1e-3
    lr_decay: float = 0.5
    lr_decay_every: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    lambda_phys: float = 0.1
    lambda_ic: float = 1.0
    lambda_bc: float = 1.0
    log_every: int = 1
    # reference integrator
    substeps_per_output: int = 8
    dealias: bool = True
    # default paths, used when the matching command-line flag is absent
    train_data: str = ""
    val_data: str = ""
    checkpoint: str = ""
    history: str = ""

    def pde_kind(self) -> PdeKind:
        return make_pde(self.pde, None if math.isnan(self.pde_param) else self.pde_param)

    def grid(self) -> Grid:
        return Grid(self.n_x, self.n_t, self.length_x, self.horizon_t)

    def manufactured_spec(self) -> ManufacturedSpec:
        return ManufacturedSpec(
            self.k_x_terms, self.k_t_terms, self.k_max, self.omega_max,
            (self.a_min, self.a_max), (self.b_min, self.b_max), self.base_seed,
        )

    def mode(self) -> DerivativeMode:
        return DerivativeMode[self.derivative_mode.upper()]

    def fno_config(self) -> FnoConfig:
        return FnoConfig(self.n_layers, self.width, self.modes_t, self.modes_x, self.lift_hidden, self.init_seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            lr_decay=self.lr_decay, lr_decay_every=self.lr_decay_every, beta1=self.beta1, beta2=self.beta2,
            seed=self.seed, weights=LossWeights(self.lambda_phys, self.lambda_ic, self.lambda_bc),
            normalize=self.normalize, log_every=self.log_every,
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(self.substeps_per_output, self.dealias)

    def validate(self) -> None:
        """Build every derived object once so bad values fail early."""
        if self.pde not in PDE_TYPES:
            raise ConfigError(f"pde: unknown pde {self.pde!r}; expected one of {sorted(PDE_TYPES)}", key="pde")
        if self.derivative_mode.upper() not in DerivativeMode.__members__:
            raise ConfigError(f"derivative_mode: expected 'discrete' or 'analytic', got {self.derivative_mode!r}",
                              key="derivative_mode")
        for build in (self.pde_kind, self.grid, self.manufactured_spec, self.fno_config, self.train_config,
                      self.integrator_config):
            try:
                build()
            except MMLError as exc:
                raise ConfigError(str(exc)) from exc


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _FIELDS[key].type
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in seen:
            raise ConfigError(f"key {key!r} already set on line {seen[key]}", line=lineno, key=key)
        seen[key] = lineno
        try:
            setattr(cfg, key, _convert(key, raw))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line=lineno, key=key) from None
        if key == "pde" and cfg.pde not in PDE_TYPES:
            raise ConfigError(f"pde: unknown pde {raw!r}; expected one of {sorted(PDE_TYPES)}", line=lineno, key=key)
    cfg.validate()
    return cfg


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: RunConfig) -> str:
    """Effective configuration, one ``key = value`` per line, re-parseable."""
    lines = ["# effective configuration (defaults filled in)"]
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def write_sidecar(cfg: RunConfig, output_path: str | os.PathLike) -> str:
    path = os.fspath(output_path) + ".config"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    return path
