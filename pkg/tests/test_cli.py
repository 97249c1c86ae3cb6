import numpy as np
import pytest

from mml.cli import main
from mml.dataset import HEADER, read_dataset
from mml.evaluation import BenchmarkCase, IcId, read_report_csv, run_benchmark
from mml.fno import load_checkpoint
from mml.train import HISTORY_HEADER, TrainHistory

TINY = """\
pde = {pde}
n_x = 16
n_t = 16
k_max = 2
omega_max = 4.0
n_layers = 1
width = 3
modes_t = 2
modes_x = 2
lift_hidden = 4
epochs = 2
batch_size = 2
log_every = 1
"""


@pytest.fixture
def workdir(tmp_path):
    return tmp_path


def write_config(path, pde="heat", extra=""):
    cfg = path / f"{pde}.cfg"
    cfg.write_text(TINY.format(pde=pde) + extra)
    return str(cfg)


def generate(workdir, pde="heat", n=4, nv=2):
    cfg = write_config(workdir, pde)
    data, val = str(workdir / "train.mmld"), str(workdir / "val.mmld")
    rc = main(["generate", "--config", cfg, "--out", data, "--val-out", val,
               "--n-samples", str(n), "--n-val-samples", str(nv)])
    assert rc == 0
    return cfg, data, val


def train_once(workdir, cfg, data, val, tag):
    ckpt, hist = str(workdir / f"{tag}.ckpt"), str(workdir / f"{tag}.csv")
    assert main(["train", "--config", cfg, "--data", data, "--val", val, "--out", ckpt, "--history", hist]) == 0
    return ckpt, hist


def test_default_generate_header(tmp_path):
    out = tmp_path / "default.mmld"
    assert main(["generate", "--out", str(out)]) == 0
    with open(out, "rb") as fh:
        head = HEADER.unpack(fh.read(HEADER.size))
    assert head[4:7] == (1024, 128, 128)
    assert out.with_name("default.mmld.config").exists()
    out.unlink()


def test_generate_override_size(workdir):
    cfg, data, val = generate(workdir, n=4, nv=2)
    d, v = read_dataset(data), read_dataset(val)
    assert len(d) == 4 and len(v) == 2
    assert (workdir / "train.mmld").stat().st_size == HEADER.size + 8 * 4 * 5 * 16 * 16
    # validation continues the sample index range of the training set
    assert not np.array_equal(d.targets[0], v.targets[0])


def test_generate_invalid_pde(workdir, capsys):
    cfg = workdir / "bad.cfg"
    cfg.write_text("pde = wave\n")
    rc = main(["generate", "--config", str(cfg), "--out", str(workdir / "x.mmld")])
    assert rc != 0
    err = capsys.readouterr().err
    assert "pde" in err and "line 1" in err


def test_train_is_deterministic(workdir, capsys):
    cfg, data, val = generate(workdir)
    a, hist_a = train_once(workdir, cfg, data, val, "a")
    b, hist_b = train_once(workdir, cfg, data, val, "b")
    assert open(a, "rb").read() == open(b, "rb").read()
    assert open(hist_a).read() == open(hist_b).read()
    assert open(hist_a).readline().strip() == ",".join(HISTORY_HEADER)
    assert len(TrainHistory.from_csv(hist_a)) == 2
    assert "epoch    2" in capsys.readouterr().out


def test_train_resume_rejected(workdir, capsys):
    cfg, data, val = generate(workdir)
    rc = main(["train", "--config", cfg, "--data", data, "--out", str(workdir / "m.ckpt"), "--resume"])
    assert rc != 0
    assert "resum" in capsys.readouterr().err


def test_train_grid_mismatch(workdir, capsys):
    cfg, data, val = generate(workdir)
    other = workdir / "other.cfg"
    other.write_text(TINY.format(pde="heat").replace("n_x = 16", "n_x = 32"))
    rc = main(["train", "--config", str(other), "--data", data, "--out", str(workdir / "m.ckpt")])
    assert rc != 0
    assert "grid" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_divergence_surfaces_epoch(workdir, capsys):
    cfg = write_config(workdir, extra="learning_rate = 1e300\n")
    data = str(workdir / "train.mmld")
    assert main(["generate", "--config", cfg, "--out", data, "--n-samples", "4"]) == 0
    rc = main(["train", "--config", cfg, "--data", data, "--out", str(workdir / "m.ckpt")])
    err = capsys.readouterr().err
    assert rc != 0
    assert "epoch" in err


def test_eval_matches_library(workdir):
    cfg, data, val = generate(workdir)
    ckpt, _ = train_once(workdir, cfg, data, val, "m")
    report = workdir / "report.csv"
    assert main(["eval", "--config", cfg, "--checkpoint", ckpt, "--pde", "heat", "--out", str(report)]) == 0
    rows = read_report_csv(report)
    assert [r.ic_id for r in rows] == ["single", "two", "three"]
    assert all(r.rel_l2_pct >= 0 for r in rows)
    loaded = load_checkpoint(ckpt)
    direct = run_benchmark(loaded.params, BenchmarkCase(loaded.pde, IcId.TWO), loaded.grid)
    assert rows[1] == direct


def test_eval_wrong_pde(workdir, capsys):
    cfg, data, val = generate(workdir)
    ckpt, _ = train_once(workdir, cfg, data, val, "m")
    rc = main(["eval", "--checkpoint", ckpt, "--pde", "burgers", "--out", str(workdir / "r.csv")])
    assert rc != 0


def test_eval_reports_diverging_reference_as_nan(workdir):
    cfg = write_config(workdir, "diffusion_reaction")
    data = str(workdir / "dr.mmld")
    assert main(["generate", "--config", cfg, "--out", data, "--n-samples", "2"]) == 0
    ckpt = str(workdir / "dr.ckpt")
    assert main(["train", "--config", cfg, "--data", data, "--out", ckpt]) == 0
    report = workdir / "dr.csv"
    assert main(["eval", "--checkpoint", ckpt, "--pde", "diffusion_reaction", "--out", str(report)]) == 0
    rows = read_report_csv(report)
    assert np.isfinite(rows[0].rel_l2_pct)
    assert np.isnan(rows[2].rel_l2_pct)


def test_plot_outputs(workdir):
    cfg, data, val = generate(workdir)
    ckpt, _ = train_once(workdir, cfg, data, val, "m")
    prefix = str(workdir / "fig")
    assert main(["plot", "--checkpoint", ckpt, "--pde", "heat", "--ic", "three", "--out-prefix", prefix]) == 0
    for t in ("0", "0.5", "1"):
        lines = (workdir / f"fig_slice_t{t}.csv").read_text().splitlines()
        assert lines[0] == "x,prediction,reference"
        assert len(lines) == 1 + 16
    pred = np.loadtxt(workdir / "fig_prediction.csv", delimiter=",")
    ref = np.loadtxt(workdir / "fig_reference.csv", delimiter=",")
    err = np.loadtxt(workdir / "fig_error.csv", delimiter=",")
    assert pred.shape == (16, 16)
    assert np.array_equal(err, np.abs(pred - ref))
    raw = (workdir / "fig_error.pgm").read_bytes()
    assert raw.startswith(b"P5\n16 16\n255\n")
    assert len(raw) - len(b"P5\n16 16\n255\n") == 16 * 16


def test_plot_no_pixmap_and_bad_ic(workdir, capsys):
    cfg, data, val = generate(workdir)
    ckpt, _ = train_once(workdir, cfg, data, val, "m")
    prefix = str(workdir / "np")
    assert main(["plot", "--checkpoint", ckpt, "--pde", "heat", "--ic", "single", "--out-prefix", prefix,
                 "--no-pixmap"]) == 0
    assert not (workdir / "np_prediction.pgm").exists()
    rc = main(["plot", "--checkpoint", ckpt, "--pde", "heat", "--ic", "four", "--out-prefix", prefix])
    assert rc != 0
    assert "ic" in capsys.readouterr().err
