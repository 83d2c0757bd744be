"""Shared fixtures: small datasets and a briefly trained MiniVGG."""

import numpy as np
import pytest

from classifier import TrainConfig, build_minivgg, train
from core.sgd import SgdConfig
from dataset.splits import balanced_split
from generators import SynthConfig, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset():
    """40 synthetic 16x16 images per class, with masks."""
    return generate_synthetic(SynthConfig(image_size=16, samples_per_class=40, seed=3))


@pytest.fixture(scope="session")
def trained_small():
    """MiniVGG briefly trained on 16x16 synthetic data, frozen, with its splits."""
    images = generate_synthetic(SynthConfig(image_size=16, samples_per_class=60, seed=11))
    splits = balanced_split(images, seed=0)
    network = build_minivgg(16, 16, 2, seed=0)
    config = TrainConfig(
        epochs=15,
        batch_size=16,
        sgd=SgdConfig(learning_rate=0.05, momentum=0.9, decay_factor=0.5, decay_interval=10),
        seed=0,
    )
    checkpoint = train(network, splits, config)
    checkpoint.network.freeze()
    return checkpoint, splits
