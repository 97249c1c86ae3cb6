"""Zero-forcing inference and the benchmark initial-condition suites."""
from __future__ import annotations

import csv
import enum
import os
from dataclasses import astuple, dataclass

import numpy as np

from .dataset import assemble_input
from .errors import InvalidArgumentError, UndefinedMetricError
from .fno import FnoParams, forward
from .grid import Grid
from .pde import PdeKind
from .reference import IntegratorConfig, reference_solution

SLICE_TIMES = (0.0, 0.5, 1.0)
REPORT_HEADER = ("pde", "ic_id", "rel_l2_pct", "slice_t0_pct", "slice_t05_pct", "slice_t1_pct",
                 "periodicity_gap", "max_abs_err")


class IcId(enum.Enum):
    SINGLE = "single"
    TWO = "two"
    THREE = "three"


# (amplitude, wavenumber, phase) triples of sum a * sin(k x + phase)
_HEAT_ICS = {
    IcId.SINGLE: ((0.8, 1, 0.0),),
    IcId.TWO: ((0.5, 1, 0.0), (-0.8, 3, 0.7)),
    IcId.THREE: ((0.9, 1, 0.0), (-0.3, 3, 0.7), (0.7, 5, -1.2)),
}
_BURGERS_ICS = {
    IcId.SINGLE: ((0.8, 1, 0.0),),
    IcId.TWO: ((0.8, 1, 0.0), (-0.3, 3, 0.7)),
    IcId.THREE: ((-0.8, 1, 0.0), (0.3, 3, 0.7), (-0.2, 5, -1.1)),
}
_DR_ICS = {
    IcId.SINGLE: ((0.8, 1, 0.0),),
    IcId.TWO: ((-0.5, 1, 0.0), (0.8, 3, 0.7)),
    IcId.THREE: ((0.9, 1, 0.0), (-0.3, 3, 0.7), (0.7, 5, -1.2)),
}
# advection reuses the heat hierarchy
IC_SUITES = {"heat": _HEAT_ICS, "advection": _HEAT_ICS, "burgers": _BURGERS_ICS, "diffusion_reaction": _DR_ICS}


@dataclass(frozen=True)
class BenchmarkCase:
    pde: PdeKind
    ic_id: IcId

    @property
    def terms(self) -> tuple[tuple[float, int, float], ...]:
        return IC_SUITES[self.pde.name][self.ic_id]

    def ic(self, grid: Grid) -> np.ndarray:
        x = grid.x
        return sum(a * np.sin(k * x + phase) for a, k, phase in self.terms)


def benchmark_cases(pde: PdeKind) -> list[BenchmarkCase]:
    return [BenchmarkCase(pde, ic) for ic in IcId]


def relative_l2(pred, ref) -> float:
    """``100 * ||pred - ref|| / ||ref||`` over all grid points."""
    pred, ref = np.asarray(pred, dtype=float), np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise InvalidArgumentError(f"shape mismatch {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise UndefinedMetricError("reference field has zero norm")
    return float(100.0 * np.linalg.norm(pred - ref) / denom)


def zero_forcing_input(u0, grid: Grid) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n_x,):
        raise InvalidArgumentError(f"initial condition has shape {u0.shape}, grid needs ({grid.n_x},)")
    return assemble_input(np.zeros(grid.shape), u0, grid)


def zero_forcing_infer(params: FnoParams, u0, grid: Grid, trained_grid: Grid | None = None) -> np.ndarray:
    """Run the operator with ``f = 0``; returns the ``(n_t, n_x)`` field."""
    if trained_grid is not None and trained_grid != grid:
        raise InvalidArgumentError(f"checkpoint was trained on {trained_grid}, asked to run on {grid}")
    return forward(params, zero_forcing_input(u0, grid))[0]


@dataclass(frozen=True)
class BenchmarkReport:
    pde: str
    ic_id: str
    rel_l2_pct: float
    slice_t0_pct: float
    slice_t05_pct: float
    slice_t1_pct: float
    periodicity_gap: float
    max_abs_err: float


@dataclass(frozen=True)
class BenchmarkResult:
    report: BenchmarkReport
    prediction: np.ndarray
    reference: np.ndarray


def compare(case: BenchmarkCase, pred: np.ndarray, ref: np.ndarray, grid: Grid) -> BenchmarkReport:
    slices = [relative_l2(pred[grid.time_index(t)], ref[grid.time_index(t)]) for t in SLICE_TIMES]
    # endpoint jump of the prediction measured against the reference's own jump
    gap = np.max(np.abs((pred[:, 0] - pred[:, -1]) - (ref[:, 0] - ref[:, -1])))
    return BenchmarkReport(
        case.pde.name, case.ic_id.value, relative_l2(pred, ref), *slices,
        float(gap), float(np.max(np.abs(pred - ref))),
    )


def run_benchmark_full(params: FnoParams, case: BenchmarkCase, grid: Grid,
                       integrator_cfg: IntegratorConfig = IntegratorConfig()) -> BenchmarkResult:
    u0 = case.ic(grid)
    ref = reference_solution(case.pde, u0, grid, integrator_cfg)
    pred = zero_forcing_infer(params, u0, grid)
    return BenchmarkResult(compare(case, pred, ref, grid), pred, ref)


def run_benchmark(params: FnoParams, case: BenchmarkCase, grid: Grid,
                  integrator_cfg: IntegratorConfig = IntegratorConfig()) -> BenchmarkReport:
    return run_benchmark_full(params, case, grid, integrator_cfg).report


def write_report_csv(reports, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in reports:
            row = astuple(r)
            writer.writerow(list(row[:2]) + [repr(float(v)) for v in row[2:]])


def read_report_csv(path: str | os.PathLike) -> list[BenchmarkReport]:
    with open(path, newline="") as fh:
        return [
            BenchmarkReport(r["pde"], r["ic_id"], *(float(r[k]) for k in REPORT_HEADER[2:]))
            for r in csv.DictReader(fh)
        ]
