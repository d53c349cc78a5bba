"""Training loop: determinism, loss records, divergence handling."""

import numpy as np
import pytest

from guidedvo.model import ModelConfig, init_model_params
from guidedvo.synthetic import SyntheticWorldConfig, generate_synthetic
from guidedvo.training import TrainConfig, TrainingDivergedError, train, write_loss_curve

TINY_MODEL = dict(channel_multiplier=1.0 / 64.0, seq_len=3)


@pytest.fixture(scope="module")
def tiny_dataset():
    cfg = SyntheticWorldConfig(n_sequences=2, seq_len=3, image_size=64, seed=5)
    return generate_synthetic(cfg)


def test_zero_iterations_returns_initialization(tiny_dataset):
    mcfg = ModelConfig(variant="SRNN", **TINY_MODEL)
    tcfg = TrainConfig(iterations=0, batch_size=1, seed=9)
    result = train(tiny_dataset, mcfg, tcfg)
    reference = init_model_params(mcfg, seed=9)
    assert result.loss_curve == []
    assert result.state.step == 0
    for name, tensor in reference.items():
        np.testing.assert_array_equal(result.params[name].data, tensor.data)


def test_loss_curve_length_matches_iterations(tiny_dataset):
    mcfg = ModelConfig(variant="SRNN", **TINY_MODEL)
    tcfg = TrainConfig(iterations=5, batch_size=1, seed=1)
    result = train(tiny_dataset, mcfg, tcfg)
    assert len(result.loss_curve) == 5
    assert [it for it, _ in result.loss_curve] == list(range(5))
    assert all(np.isfinite(v) for _, v in result.loss_curve)


def test_identical_seeds_bit_identical_checkpoints(tiny_dataset):
    mcfg = ModelConfig(variant="SRNN_channel", **TINY_MODEL)
    tcfg = TrainConfig(iterations=4, batch_size=2, seed=123)
    a = train(tiny_dataset, mcfg, tcfg)
    b = train(tiny_dataset, mcfg, tcfg)
    for name, tensor in a.params.items():
        np.testing.assert_array_equal(tensor.data, b.params[name].data)
    for name in a.state.m:
        np.testing.assert_array_equal(a.state.m[name], b.state.m[name])
        np.testing.assert_array_equal(a.state.v[name], b.state.v[name])
    assert a.loss_curve == b.loss_curve


def test_different_seeds_differ(tiny_dataset):
    mcfg = ModelConfig(variant="SRNN", **TINY_MODEL)
    a = train(tiny_dataset, mcfg, TrainConfig(iterations=2, batch_size=1, seed=0))
    b = train(tiny_dataset, mcfg, TrainConfig(iterations=2, batch_size=1, seed=1))
    assert any(
        not np.array_equal(a.params[n].data, b.params[n].data) for n in a.params.names()
    )


def test_longer_sequences_are_windowed(tiny_dataset):
    # dataset sequences have 3 frames; train with windows of 2
    mcfg = ModelConfig(variant="SRNN", channel_multiplier=1.0 / 64.0, seq_len=2)
    result = train(tiny_dataset, mcfg, TrainConfig(iterations=2, batch_size=1, seed=4))
    assert len(result.loss_curve) == 2


def test_divergence_aborts_with_diagnostic(tiny_dataset):
    mcfg = ModelConfig(variant="SRNN", **TINY_MODEL)
    params = init_model_params(mcfg, seed=0)
    params["rot/head/weight"].data[...] = np.nan
    with pytest.raises(TrainingDivergedError, match="iteration 0"):
        train(tiny_dataset, mcfg, TrainConfig(iterations=1, batch_size=1, seed=0), params=params)


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train([], ModelConfig(variant="SRNN", **TINY_MODEL), TrainConfig(iterations=1))


def test_loss_curve_csv(tmp_path):
    path = tmp_path / "loss.csv"
    write_loss_curve([(0, 1.5), (1, 0.75)], path)
    assert path.read_text() == "0,1.5\n1,0.75\n"
