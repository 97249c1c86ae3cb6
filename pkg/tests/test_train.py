import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mml import autodiff as ad
from mml.dataset import build_dataset
from mml.errors import DivergedError, InvalidArgumentError
from mml.fno import FnoConfig, forward, forward_tensors, init_params
from mml.grid import Grid
from mml.manufactured import ManufacturedSpec
from mml.pde import Advection, Burgers, DiffusionReaction, Heat
from mml.train import (
    HISTORY_HEADER,
    Adam,
    EpochRecord,
    LossWeights,
    TrainConfig,
    TrainHistory,
    composite_loss,
    loss_and_grads,
    mean_relative_l2,
    train,
)

GRID = Grid(16, 16)
SPEC = ManufacturedSpec(k_max=2, omega_max=4.0, base_seed=11)
TINY = FnoConfig(n_layers=1, width=3, modes_t=2, modes_x=2, lift_hidden=4, init_seed=2)
ZERO = LossWeights(0.0, 0.0, 0.0)


def tiny_data(pde=Heat(), n=4, first=0):
    return build_dataset(SPEC, pde, GRID, n, first_index=first)


def parts_of(pred, sample, pde, weights=LossWeights()):
    total, parts = composite_loss(pred, sample.input, sample.target, pde, GRID, weights)
    return total.item(), {k: v.item() for k, v in parts.items()}


@pytest.mark.parametrize("pde", [Heat(), Advection(), Burgers(), DiffusionReaction()])
def test_exact_target_has_zero_loss(pde):
    s = tiny_data(pde, 1)[0]
    _, parts = parts_of(s.target, s, pde)
    assert parts["l_data"] == 0.0
    assert parts["l_ic"] == 0.0
    assert parts["l_phys"] <= 1e-12


def test_constant_shift_heat():
    s = tiny_data(Heat(), 1)[0]
    _, base = parts_of(s.target, s, Heat())
    _, shifted = parts_of(s.target + 0.1, s, Heat())
    assert shifted["l_data"] == pytest.approx(0.01, rel=1e-12)
    assert shifted["l_phys"] == pytest.approx(base["l_phys"], abs=1e-12)


def test_constant_shift_changes_reaction_residual():
    pde = DiffusionReaction()
    s = tiny_data(pde, 1)[0]
    _, shifted = parts_of(s.target + 0.1, s, pde)
    assert shifted["l_phys"] > 1e-4


def test_zero_weights_give_data_loss(rng):
    s = tiny_data(Heat(), 1)[0]
    pred = s.target + rng.normal(scale=0.1, size=s.target.shape)
    total, parts = parts_of(pred, s, Heat(), ZERO)
    assert total == parts["l_data"]


def test_total_combines_parts(rng):
    s = tiny_data(Burgers(), 1)[0]
    pred = s.target + rng.normal(scale=0.1, size=s.target.shape)
    w = LossWeights(0.3, 2.0, 0.7)
    total, p = parts_of(pred, s, Burgers(), w)
    assert total == pytest.approx(p["l_data"] + 0.3 * p["l_phys"] + 2.0 * p["l_ic"] + 0.7 * p["l_bc"], rel=1e-14)


def test_ic_and_bc_definitions(rng):
    s = tiny_data(Heat(), 1)[0]
    pred = rng.normal(size=s.target.shape)
    _, p = parts_of(pred, s, Heat())
    assert p["l_ic"] == pytest.approx(np.mean((pred[0, 0] - s.input[3, 0]) ** 2), rel=1e-14)
    assert p["l_bc"] == pytest.approx(np.mean((pred[0, :, 0] - pred[0, :, -1]) ** 2), rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([Heat(), Burgers(), DiffusionReaction()]))
def test_loss_terms_non_negative(seed, pde):
    rng = np.random.default_rng(seed)
    s = tiny_data(pde, 1)[0]
    _, p = parts_of(rng.normal(size=s.target.shape), s, pde)
    assert all(v >= 0 for v in p.values())


def test_mse_path_gradients_agree():
    """Zero weights: tape gradients equal those of an independent MSE graph."""
    data = tiny_data(Heat(), 2)
    params = init_params(TINY)
    _, _, grads = loss_and_grads(params, data.inputs, data.targets, Heat(), GRID, ZERO)

    leaves = {k: ad.Tensor(v.copy(), requires_grad=True) for k, v in params.arrays.items()}
    pred = forward_tensors(leaves, data.inputs, TINY)
    diff = ad.add(pred, ad.Tensor(-data.targets))
    plain = ad.mean(ad.multiply(diff, diff))
    oracle = dict(zip(leaves, ad.backward(plain, list(leaves.values()))))
    for k in grads:
        assert np.max(np.abs(grads[k] - oracle[k])) <= 1e-10 * max(1.0, np.max(np.abs(oracle[k])))


def test_composite_gradient_matches_fd():
    """End-to-end loss on a width-4, 2-mode model over an 8x8 grid."""
    grid = Grid(8, 8)
    data = build_dataset(ManufacturedSpec(k_max=1, omega_max=3.0, base_seed=5), Burgers(), grid, 2)
    cfg = FnoConfig(n_layers=2, width=4, modes_t=2, modes_x=2, lift_hidden=4, init_seed=9)
    params = init_params(cfg)
    w = LossWeights(0.5, 1.0, 1.0)
    _, _, grads = loss_and_grads(params, data.inputs, data.targets, Burgers(), grid, w)

    def loss(arrays):
        t = {k: ad.Tensor(v) for k, v in arrays.items()}
        pred = forward_tensors(t, data.inputs, cfg)
        return composite_loss(pred, data.inputs, data.targets, Burgers(), grid, w)[0].item()

    eps = 1e-5
    for name, arr in params.arrays.items():
        for idx in [np.unravel_index(np.argmax(np.abs(grads[name])), arr.shape), (0,) * arr.ndim]:
            bumped = {k: v.copy() for k, v in params.arrays.items()}
            bumped[name][idx] += eps
            up = loss(bumped)
            bumped[name][idx] -= 2 * eps
            fd = (up - loss(bumped)) / (2 * eps)
            g = grads[name][idx]
            assert abs(g - fd) <= 1e-4 * max(abs(fd), abs(g), 1e-6), (name, idx, g, fd)


def test_one_epoch_descends():
    data = tiny_data(Heat(), 4)
    params = init_params(TINY)
    cfg = TrainConfig(epochs=1, batch_size=4, learning_rate=1e-3, weights=ZERO)
    before = loss_and_grads(params, data.inputs, data.targets, Heat(), GRID, ZERO)[0]
    after_params, _ = train(data, None, TINY, cfg)
    after = loss_and_grads(after_params, data.inputs, data.targets, Heat(), GRID, ZERO)[0]
    assert after < before


def test_training_is_deterministic():
    data, val = tiny_data(Heat(), 6), tiny_data(Heat(), 2, first=6)
    cfg = TrainConfig(epochs=3, batch_size=4, seed=4)
    a, ha = train(data, val, TINY, cfg)
    b, hb = train(data, val, TINY, cfg)
    assert a == b
    assert ha == hb


def test_history_and_best_selection():
    data, val = tiny_data(Heat(), 6), tiny_data(Heat(), 2, first=6)
    cfg = TrainConfig(epochs=4, batch_size=3, learning_rate=1e-2)
    best, history = train(data, val, TINY, cfg)
    assert [r.epoch for r in history] == [1, 2, 3, 4]
    assert mean_relative_l2(best, val) == pytest.approx(min(r.val_rel_l2 for r in history), rel=1e-12)


def test_history_csv_roundtrip(tmp_path):
    h = TrainHistory([EpochRecord(1, 0.5, 0.25, 0.1, 1e-3, 0.9, 42.0), EpochRecord(2, 0.1, 0.2, 0.3, 0.4, 0.5, math.nan)])
    path = tmp_path / "history.csv"
    h.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(HISTORY_HEADER)
    assert path.read_text().splitlines()[0] == "epoch,l_data,l_phys,l_ic,l_bc,total,val_rel_l2"
    back = TrainHistory.from_csv(path)
    assert back[0] == h[0]
    assert math.isnan(back[1].val_rel_l2) and back[1].total == 0.5


def test_divergence_reported():
    data = tiny_data(Heat(), 4)
    data.inputs[1, 0, 3, 3] = np.nan
    with pytest.raises(DivergedError) as info:
        train(data, None, TINY, TrainConfig(epochs=1, batch_size=2, seed=0))
    assert info.value.epoch == 0
    assert "epoch" in str(info.value) and "batch" in str(info.value)


def test_incompatible_validation_rejected():
    with pytest.raises(InvalidArgumentError):
        train(tiny_data(Heat(), 2), tiny_data(Burgers(), 2), TINY, TrainConfig(epochs=1))


def test_bc_bound_on_generated_data(spec):
    """Endpoint jump of the manufactured target stays below (dx * max|u_x|)**2."""
    grid = Grid(128, 32)
    data = build_dataset(spec, Heat(), grid, 8)
    from mml.manufactured import sample_field

    for i, s in enumerate(data.samples):
        field = sample_field(spec, i)
        slope = spec.k_max * field.scale * np.abs(field.spatial_terms[:, 0]).sum() * np.abs(field.temporal_terms[:, 0]).sum()
        l_bc = np.mean((s.target[0, :, 0] - s.target[0, :, -1]) ** 2)
        assert l_bc <= (grid.dx * slope) ** 2


def test_adam_first_step_moves_by_lr():
    params = {"w": np.array([1.0, -2.0])}
    opt = Adam(params)
    opt.step(params, {"w": np.array([0.3, -5.0])}, lr=0.1)
    assert np.allclose(params["w"], [0.9, -1.9], atol=1e-7)


def test_lr_schedule():
    cfg = TrainConfig()
    assert [cfg.lr_at(e) for e in (0, 99, 100, 250)] == [1e-3, 1e-3, 5e-4, 2.5e-4]


def test_normalization_fitted_when_requested():
    data = tiny_data(Heat(), 4)
    params, _ = train(data, None, TINY, TrainConfig(epochs=1, normalize=True))
    assert params.normalization is not None
    assert forward(params, data.inputs[0]).shape == (1, 16, 16)
