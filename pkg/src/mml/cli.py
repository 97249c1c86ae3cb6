"""Command-line entry point: ``mml generate|train|eval|plot``."""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from .config import RunConfig, load_config, write_sidecar
from .dataset import build_dataset, read_dataset, write_dataset
from .errors import BlowUpError, ConfigError, InvalidArgumentError, MMLError
from .evaluation import (
    SLICE_TIMES,
    BenchmarkCase,
    BenchmarkReport,
    IcId,
    benchmark_cases,
    run_benchmark,
    run_benchmark_full,
    write_report_csv,
)
from .fno import Checkpoint, load_checkpoint, save_checkpoint
from .pde import make_pde
from .train import train

log = logging.getLogger("mml")


def _require(value: str | None, cfg_value: str, flag: str) -> str:
    path = value or cfg_value
    if not path:
        raise ConfigError(f"{flag} is required (or set it in the config file)")
    return path


def cmd_generate(args, cfg: RunConfig) -> int:
    if args.n_samples is not None:
        cfg.n_samples = args.n_samples
    if args.n_val_samples is not None:
        cfg.n_val_samples = args.n_val_samples
    cfg.validate()
    out = _require(args.out, cfg.train_data, "--out")
    spec, pde, grid, mode = cfg.manufactured_spec(), cfg.pde_kind(), cfg.grid(), cfg.mode()
    write_dataset(build_dataset(spec, pde, grid, cfg.n_samples, mode), out)
    print(f"wrote {cfg.n_samples} samples to {out}")
    val_out = args.val_out or cfg.val_data
    if val_out:
        # validation indices follow the training range so the two never overlap
        val = build_dataset(spec, pde, grid, cfg.n_val_samples, mode, first_index=cfg.n_samples)
        write_dataset(val, val_out)
        print(f"wrote {cfg.n_val_samples} validation samples to {val_out}")
    write_sidecar(cfg, out)
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    if args.resume:
        raise InvalidArgumentError("resuming training is not supported; start a fresh run")
    data = read_dataset(_require(args.data, cfg.train_data, "--data"))
    val_path = args.val or cfg.val_data
    val = read_dataset(val_path) if val_path else None
    grid = cfg.grid()
    if data.grid != grid:
        raise InvalidArgumentError(
            f"dataset grid (n_t={data.grid.n_t}, n_x={data.grid.n_x}) does not match config "
            f"(n_t={grid.n_t}, n_x={grid.n_x})"
        )
    if data.pde != cfg.pde_kind():
        raise InvalidArgumentError(f"dataset pde {data.pde} does not match config pde {cfg.pde_kind()}")
    out = _require(args.out, cfg.checkpoint, "--out")

    def report(r):
        if cfg.log_every and r.epoch % cfg.log_every == 0:
            print(
                f"epoch {r.epoch:4d}  total {r.total:.4e}  data {r.l_data:.3e}  phys {r.l_phys:.3e}  "
                f"ic {r.l_ic:.3e}  bc {r.l_bc:.3e}  val_rel_l2 {r.val_rel_l2:.3f}%",
                flush=True,
            )

    params, history = train(data, val, cfg.fno_config(), cfg.train_config(), on_epoch=report)
    save_checkpoint(Checkpoint(params, data.grid, data.pde), out)
    history_path = args.history or cfg.history
    if history_path:
        history.to_csv(history_path)
    write_sidecar(cfg, out)
    print(f"wrote checkpoint {out}")
    return 0


def _checkpoint_and_pde(args):
    ckpt = load_checkpoint(args.checkpoint)
    pde = make_pde(args.pde)
    if type(pde) is not type(ckpt.pde):
        raise InvalidArgumentError(f"checkpoint was trained for {ckpt.pde.name}, not {args.pde}")
    return ckpt, ckpt.pde


def cmd_eval(args, cfg: RunConfig) -> int:
    ckpt, pde = _checkpoint_and_pde(args)
    reports = []
    for case in benchmark_cases(pde):
        try:
            reports.append(run_benchmark(ckpt.params, case, ckpt.grid, cfg.integrator_config()))
        except BlowUpError as exc:
            # the unforced PDE itself diverges; report the case as undefined
            log.warning("%s %s: reference solution diverged (%s)", pde.name, case.ic_id.value, exc)
            reports.append(BenchmarkReport(pde.name, case.ic_id.value, *[math.nan] * 6))
    write_report_csv(reports, args.out)
    for r in reports:
        print(f"{r.pde:20s} {r.ic_id:6s} rel_l2 {r.rel_l2_pct:8.3f}%")
    return 0


def write_field_csv(field: np.ndarray, path: str) -> None:
    np.savetxt(path, field, delimiter=",", fmt="%.17g")


def write_pgm(field: np.ndarray, path: str) -> None:
    """8-bit binary graymap, width n_x, height n_t, first row is t = 0."""
    lo, hi = float(field.min()), float(field.max())
    span = hi - lo
    scaled = np.zeros(field.shape) if span == 0 else (field - lo) / span
    pixels = np.round(scaled * 255).astype(np.uint8)
    n_t, n_x = field.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n_x} {n_t}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def cmd_plot(args, cfg: RunConfig) -> int:
    ckpt, pde = _checkpoint_and_pde(args)
    try:
        ic = IcId(args.ic)
    except ValueError:
        raise InvalidArgumentError(f"unknown ic {args.ic!r}; expected single, two or three") from None
    grid = ckpt.grid
    result = run_benchmark_full(ckpt.params, BenchmarkCase(pde, ic), grid, cfg.integrator_config())
    pred, ref = result.prediction, result.reference
    fields = {"prediction": pred, "reference": ref, "error": np.abs(pred - ref)}
    prefix = args.out_prefix
    for t in SLICE_TIMES:
        n = grid.time_index(t)
        table = np.column_stack([grid.x, pred[n], ref[n]])
        np.savetxt(f"{prefix}_slice_t{t:g}.csv", table, delimiter=",", fmt="%.17g",
                   header="x,prediction,reference", comments="")
    for name, field in fields.items():
        write_field_csv(field, f"{prefix}_{name}.csv")
        if not args.no_pixmap:
            write_pgm(field, f"{prefix}_{name}.pgm")
    print(f"rel_l2 {result.report.rel_l2_pct:.3f}%  wrote {prefix}_*")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mml", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write manufactured train/validation datasets")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--val-out")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--n-val-samples", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the neural operator")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--val")
    p.add_argument("--out")
    p.add_argument("--history")
    p.add_argument("--resume", action="store_true", help="not supported; always an error")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="zero-forcing benchmark report")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pde", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="dump time slices, fields and heatmaps")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pde", required=True)
    p.add_argument("--ic", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--no-pixmap", action="store_true")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MMLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
