"""Input-gradient attributions: saliency and integrated gradients."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from attribution.maps import AttributionMap
from core.network import Network, ScoreTarget, as_batch, backward, forward


def _input_gradients(network: Network, batch: np.ndarray, class_index: int, target: ScoreTarget) -> np.ndarray:
    _, record = forward(network, batch, record=True)
    return backward(record, class_index, target).wrt(record.input)


def saliency(
    network: Network,
    image: np.ndarray,
    class_index: int,
    target: ScoreTarget = "probability",
    image_id: str = ""
) -> AttributionMap:
    """Absolute derivative of the class probability with respect to each pixel."""
    batch = as_batch(image, network.input_shape).astype(network.dtype, copy=False)
    grad = _input_gradients(network, batch, class_index, target)
    return AttributionMap(np.abs(grad[0, 0]), "saliency", image_id)


class IgConfig(BaseModel):
    """Integrated-gradients parameters; the path starts at the black image."""

    steps: int = Field(default=128, ge=1)
    target: Literal["logit", "probability"] = "logit"
    batch_size: int = Field(default=64, ge=1)


def integrated_gradients(
    network: Network,
    image: np.ndarray,
    class_index: int,
    config: IgConfig,
    image_id: str = ""
) -> AttributionMap:
    """Right-endpoint Riemann sum of path gradients from the black baseline.

    IG_i = x_i * (1/m) * sum_{k=1..m} df/dx_i at (k/m) * x

    Returns:
        Signed attribution map
    """
    x = as_batch(image, network.input_shape).astype(network.dtype, copy=False)[0]
    m = config.steps
    total = np.zeros(x.shape, dtype=np.float64)
    for start in range(1, m + 1, config.batch_size):
        ks = np.arange(start, min(start + config.batch_size, m + 1))
        scales = (ks / m).astype(x.dtype)
        path = scales[:, None, None, None] * x[None]
        total += _input_gradients(network, path, class_index, config.target).sum(axis=0)
    values = (total / m) * x
    return AttributionMap(values[0].astype(np.float32), "intgrads", image_id)
