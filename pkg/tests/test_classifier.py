"""Tests for MiniVGG, training, holdout metrics and checkpoints."""

import numpy as np
import pytest
import yaml
from pydantic import ValidationError

from classifier import (
    Checkpoint,
    TrainConfig,
    build_minivgg,
    evaluate_classifier,
    load_checkpoint,
    save_checkpoint,
    train,
    verify_fingerprint,
)
from classifier.checkpoint import MANIFEST_FILE, WEIGHTS_FILE
from core.network import forward
from core.sgd import SgdConfig
from dataset.splits import DatasetSplits
from surrogates import dense_model, labeled
from utils.errors import DataError, DimensionError, FormatError, NumericError, StateError


def _splits(train_items, validation_items=None):
    return DatasetSplits(train=list(train_items), validation=list(validation_items or train_items), holdout=[])


def _mixed(images, count):
    """First `count` images alternating between the two classes."""
    by_class = [[item for item in images if item.label == c] for c in (0, 1)]
    return [by_class[i % 2][i // 2] for i in range(count)]


# Architecture

@pytest.mark.parametrize("num_classes", [2, 3])
def test_minivgg_output_width(num_classes):
    network = build_minivgg(32, 32, num_classes)
    probs, _ = forward(network, np.zeros((32, 32)))
    assert probs.shape == (1, num_classes)
    assert network.conv_layers() == ["conv1", "conv2", "conv3", "conv4"]


def test_minivgg_seeded_initialization():
    assert build_minivgg(32, 32, 2, seed=7).checksum() == build_minivgg(32, 32, 2, seed=7).checksum()
    assert build_minivgg(32, 32, 2, seed=7).checksum() != build_minivgg(32, 32, 2, seed=8).checksum()
    biases = [v for k, v in build_minivgg(16, 16, 2).parameters().items() if k.endswith(".bias")]
    assert all(not b.any() for b in biases)


@pytest.mark.parametrize("h, w", [(12, 32), (18, 32), (32, 30)])
def test_minivgg_rejects_invalid_dims(h, w):
    with pytest.raises(DimensionError):
        build_minivgg(h, w, 2)


# Training

def test_overfits_a_single_batch(small_dataset):
    items = [item for item in small_dataset if item.label == 0][:4] + [item for item in small_dataset if item.label == 1][:4]
    network = build_minivgg(16, 16, 2, seed=1)
    config = TrainConfig(epochs=200, batch_size=8, sgd=SgdConfig(learning_rate=0.05, momentum=0.9), seed=0)
    checkpoint = train(network, _splits(items), config)
    assert checkpoint.history[-1]["train_loss"] < 0.01
    assert checkpoint.validation_loss < 0.01


def test_selects_the_epoch_with_lowest_validation_loss(small_dataset):
    network = build_minivgg(16, 16, 2, seed=2)
    checkpoint = train(network, _splits(small_dataset[::2], small_dataset[1::2]), TrainConfig(epochs=4, batch_size=8))
    losses = [h["validation_loss"] for h in checkpoint.history]
    assert len(losses) == 4
    assert checkpoint.validation_loss == min(losses)
    assert checkpoint.epoch == losses.index(min(losses)) + 1


def test_learning_rate_decays_by_epoch(small_dataset):
    network = build_minivgg(16, 16, 2, seed=2)
    config = TrainConfig(epochs=3, batch_size=16, sgd=SgdConfig(learning_rate=0.04, decay_factor=0.5, decay_interval=2))
    checkpoint = train(network, _splits(_mixed(small_dataset, 32)), config)
    assert [h["learning_rate"] for h in checkpoint.history] == pytest.approx([0.04, 0.04, 0.02])


def test_training_is_deterministic(small_dataset):
    config = TrainConfig(epochs=2, batch_size=8, seed=5)
    first = train(build_minivgg(16, 16, 2, seed=0), _splits(_mixed(small_dataset, 24)), config)
    second = train(build_minivgg(16, 16, 2, seed=0), _splits(_mixed(small_dataset, 24)), config)
    assert first.network.checksum() == second.network.checksum()
    assert first.history == second.history


def test_zero_epochs_rejected():
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0)


def test_training_preconditions(small_dataset):
    with pytest.raises(DataError):
        train(build_minivgg(16, 16, 2), _splits([], small_dataset[:4]), TrainConfig(epochs=1))
    with pytest.raises(StateError):
        train(build_minivgg(16, 16, 2).freeze(), _splits(_mixed(small_dataset, 8)), TrainConfig(epochs=1, batch_size=4))
    with pytest.raises(DataError):
        train(build_minivgg(16, 16, 1), _splits(_mixed(small_dataset, 8)), TrainConfig(epochs=1, batch_size=4))


def test_divergence_reports_the_epoch(small_dataset):
    network = build_minivgg(16, 16, 2, seed=0)
    params = network.parameters()
    params["fc1.weight"] = np.full_like(params["fc1.weight"], np.inf)
    network.set_parameters(params)
    with pytest.raises(NumericError, match="epoch 1"):
        train(network, _splits(_mixed(small_dataset, 16)), TrainConfig(epochs=2, batch_size=8))


# Metrics

def _brightness_images():
    dark = [labeled(np.full((4, 4), 0.1), label=0, image_id=f"d{i}") for i in range(3)]
    bright = [labeled(np.full((4, 4), 0.9), label=1, image_id=f"b{i}") for i in range(3)]
    return dark + bright


def test_metrics_for_perfect_predictions():
    weight = np.zeros((16, 2))
    weight[:, 0], weight[:, 1] = -1.0, 1.0
    network = dense_model(weight, [8.0, -8.0], (4, 4), head="softmax")
    metrics = evaluate_classifier(network, _brightness_images())
    assert metrics.accuracy == 1.0
    assert metrics.f1 == 1.0
    assert metrics.confusion == [[3, 0], [0, 3]]


def test_metrics_when_everything_is_class_zero():
    network = dense_model(np.zeros((16, 2)), [1.0, 0.0], (4, 4), head="softmax")
    metrics = evaluate_classifier(network, _brightness_images())
    assert metrics.accuracy == 0.5
    assert metrics.recall == 0.5
    assert 0 <= metrics.precision <= 1
    assert metrics.confusion == [[3, 0], [3, 0]]


def test_metrics_on_empty_set():
    with pytest.raises(DataError):
        evaluate_classifier(build_minivgg(16, 16, 2), [])


# Checkpoints

def _checkpoint():
    return Checkpoint(
        network=build_minivgg(16, 16, 2, seed=3),
        epoch=7,
        validation_loss=0.25,
        config={"epochs": 10},
        dataset_fingerprint="f" * 64,
        history=[{"epoch": 1, "train_loss": 0.7, "validation_loss": 0.6, "learning_rate": 0.05}],
    )


def test_checkpoint_round_trip_is_bit_exact(tmp_path, rng):
    original = _checkpoint()
    save_checkpoint(original, tmp_path)
    restored = load_checkpoint(tmp_path)

    probe = rng.random((2, 16, 16)).astype(np.float32)
    before, _ = forward(original.network, probe)
    after, _ = forward(restored.network, probe)
    assert before.tobytes() == after.tobytes()
    assert restored.network.checksum() == original.network.checksum()
    assert restored.epoch == 7
    assert restored.validation_loss == 0.25
    assert restored.history == original.history


def test_checkpoint_manifest_is_readable(tmp_path):
    save_checkpoint(_checkpoint(), tmp_path)
    manifest = yaml.safe_load((tmp_path / MANIFEST_FILE).read_text())
    assert manifest["architecture"]["layers"][0] == {"name": "conv1", "type": "conv2d", "filters": 8, "kernel": 3}
    assert manifest["tensors"][0] == {"name": "conv1.weight", "shape": [8, 1, 3, 3], "offset": 0}
    assert manifest["weights_bytes"] == (tmp_path / WEIGHTS_FILE).stat().st_size


def test_truncated_weights_report_offset(tmp_path):
    save_checkpoint(_checkpoint(), tmp_path)
    blob = (tmp_path / WEIGHTS_FILE).read_bytes()
    (tmp_path / WEIGHTS_FILE).write_bytes(blob[:1000])
    with pytest.raises(FormatError, match="offset 1000"):
        load_checkpoint(tmp_path)


def test_corrupt_manifest_is_a_format_error(tmp_path):
    save_checkpoint(_checkpoint(), tmp_path)
    (tmp_path / MANIFEST_FILE).write_text("format: [unclosed\n")
    with pytest.raises(FormatError, match="offset"):
        load_checkpoint(tmp_path)


def test_modified_weights_fail_the_checksum(tmp_path):
    save_checkpoint(_checkpoint(), tmp_path)
    blob = bytearray((tmp_path / WEIGHTS_FILE).read_bytes())
    blob[0] ^= 0xFF
    (tmp_path / WEIGHTS_FILE).write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="checksum"):
        load_checkpoint(tmp_path)


def test_fingerprint_mismatch_warns(capsys):
    checkpoint = _checkpoint()
    assert verify_fingerprint(checkpoint, "f" * 64)
    assert not verify_fingerprint(checkpoint, "0" * 64)
    assert "fingerprint" in capsys.readouterr().out.lower()
