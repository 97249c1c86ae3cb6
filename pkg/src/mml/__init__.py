"""Solver-free training of Fourier neural operators on manufactured solutions."""
from .grid import Grid, coordinate_channels
from .manufactured import ManufacturedField, ManufacturedSpec, evaluate, sample_field
from .pde import Advection, Burgers, DerivativeMode, DiffusionReaction, Heat, make_pde
from .dataset import Dataset, Sample, build_dataset, read_dataset, write_dataset
from .fno import FnoConfig, FnoParams, forward, init_params
from .train import LossWeights, TrainConfig, TrainHistory, composite_loss, train
from .reference import IntegratorConfig, advection_exact, heat_exact, integrate
from .evaluation import BenchmarkCase, IcId, relative_l2, run_benchmark, zero_forcing_infer

__version__ = "0.1.0"
