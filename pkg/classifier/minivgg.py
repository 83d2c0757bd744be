"""Scaled-down VGG-style classifier."""

import numpy as np

from core.network import DTYPE, Conv2D, Dense, Flatten, MaxPool2D, Network, ReLU
from utils.errors import DimensionError

BLOCKS = ((8, 8), (16, 16))
HIDDEN_UNITS = 64


def _he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(DTYPE)


def build_minivgg(h: int, w: int, num_classes: int, seed: int = 0) -> Network:
    """Build the two-block MiniVGG network.

    [conv 3x3x8, ReLU, conv 3x3x8, ReLU, maxpool]
    [conv 3x3x16, ReLU, conv 3x3x16, ReLU, maxpool]
    dense 64, ReLU, dense num_classes, softmax

    Args:
        h: Input height, >= 16 and divisible by 4
        w: Input width, >= 16 and divisible by 4
        num_classes: Number of output classes
        seed: Seed for the weight initialization

    Returns:
        An unfrozen network with He-uniform weights and zero biases
    """
    if h < 16 or w < 16 or h % 4 or w % 4:
        raise DimensionError(f"MiniVGG needs h, w >= 16 and divisible by 4, got {h}x{w}")
    if num_classes < 1:
        raise DimensionError(f"num_classes must be positive, got {num_classes}")

    rng = np.random.default_rng(seed)
    layers = []
    channels = 1
    conv_idx = 0
    for block_idx, widths in enumerate(BLOCKS, 1):
        for filters in widths:
            conv_idx += 1
            layers.append(Conv2D(
                name=f"conv{conv_idx}",
                weight=_he_uniform(rng, (filters, channels, 3, 3), fan_in=channels * 9),
                bias=np.zeros(filters, dtype=DTYPE),
            ))
            layers.append(ReLU(name=f"relu{conv_idx}"))
            channels = filters
        layers.append(MaxPool2D(name=f"pool{block_idx}"))

    features = channels * (h // 4) * (w // 4)
    layers += [
        Flatten(name="flatten"),
        Dense(name="fc1", weight=_he_uniform(rng, (features, HIDDEN_UNITS), fan_in=features),
              bias=np.zeros(HIDDEN_UNITS, dtype=DTYPE)),
        ReLU(name="relu_fc1"),
        Dense(name="fc2", weight=_he_uniform(rng, (HIDDEN_UNITS, num_classes), fan_in=HIDDEN_UNITS),
              bias=np.zeros(num_classes, dtype=DTYPE)),
    ]
    return Network(layers, (h, w), num_classes)
