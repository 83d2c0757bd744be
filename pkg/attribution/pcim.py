"""Pixel-wise channel isolation mixing.

Every pixel of the analyzed image is placed in its own channel. A
non-negative weight per channel mixes the channels back into one image,
which the frozen classifier scores; the weights are fitted by projected
SGD so the mixed image is classified as the image's label. The fitted
weights, reshaped to the image grid, are the attribution map.

Channel i is zero everywhere except at pixel i, so the weighted channel
sum equals the elementwise product of the weights with the image. The
fit uses the product form and never materializes the channels.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from attribution.maps import AttributionMap
from core import ops
from core.network import Network, as_batch, forward
from core.sgd import SgdConfig, SgdState, sgd_step
from core.tape import Tape
from utils.errors import ConstraintError, DataError, DimensionError, NumericError, StateError


@dataclass
class PixelChannels:
    """Row-major decomposition of an image into single-pixel channels."""

    values: np.ndarray
    coords: np.ndarray
    shape: Tuple[int, int]
    image_id: str = ""

    @property
    def p(self) -> int:
        return self.values.shape[0]


def isolate_pixels(image: np.ndarray, image_id: str = "") -> PixelChannels:
    """Split an (h, w) image into p = h * w channels in row-major order."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise DimensionError(f"expected a 2-d image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise DataError(f"image '{image_id}' has non-finite pixels")
    h, w = image.shape
    rows, cols = np.divmod(np.arange(h * w), w)
    return PixelChannels(
        values=image.reshape(-1).copy(),
        coords=np.stack([rows, cols], axis=1),
        shape=(h, w),
        image_id=image_id,
    )


def reassemble(channels: PixelChannels) -> np.ndarray:
    """Inverse of isolate_pixels."""
    return channels.values.reshape(channels.shape).copy()


def blend(alpha: np.ndarray, channels: PixelChannels) -> np.ndarray:
    """Mix the channels with non-negative weights.

    Returns:
        (h, w) image with value alpha_i * A_i at row-major position i; no
        clipping is applied
    """
    alpha = np.asarray(alpha)
    if alpha.shape != (channels.p,):
        raise DimensionError(f"{alpha.shape[0] if alpha.ndim else 0} mixing weights for {channels.p} channels")
    if np.any(alpha < 0):
        raise ConstraintError(f"mixing weights must be non-negative, min is {alpha.min()}")
    return (alpha * channels.values).reshape(channels.shape)


class FitConfig(BaseModel):
    """Mixing-weight fit parameters."""

    steps: int = Field(default=200, ge=1)
    learning_rate: float = Field(default=0.5, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    decay_factor: float = Field(default=1.0, gt=0, le=1)
    decay_interval: int = Field(default=1, ge=1)
    init: Literal["zeros", "ones"] = "zeros"
    # "probability": softmax cross-entropy; "logit": negative class logit
    loss: Literal["probability", "logit"] = "probability"

    def sgd(self) -> SgdConfig:
        return SgdConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            decay_factor=self.decay_factor,
            decay_interval=self.decay_interval,
        )


@dataclass
class MixingState:
    """Fitted mixing weights for one image."""

    alpha: np.ndarray
    optimizer: SgdState
    shape: Tuple[int, int]
    label: int
    image_id: str = ""
    step: int = 0
    losses: List[float] = field(default_factory=list)


def _mixing_loss(network: Network, blended, label: int, loss: str):
    _, record = forward(network, blended, record=True)
    labels = np.array([label])
    if loss == "logit":
        return ops.negative_class_score(record.logits, labels)
    return ops.softmax_cross_entropy(record.logits, labels)


def fit_mixing(
    network: Network,
    image: np.ndarray,
    label: int,
    config: FitConfig,
    image_id: str = "",
    callback: Optional[Callable[[int, float], None]] = None
) -> MixingState:
    """Fit per-pixel mixing weights against a frozen network.

    Each step scores blend(alpha, A), backpropagates the loss to alpha
    only, applies one SGD step and clamps alpha at zero.

    Args:
        network: Frozen classifier
        image: (h, w) image
        label: Class the blended image should be assigned to
        config: Fit parameters
        image_id: Carried into the state and the map
        callback: Called with (step, loss) after every step

    Returns:
        Final mixing state with the loss trace
    """
    if not network.frozen:
        raise StateError("mixing weights must be fitted against a frozen network")
    if not 0 <= label < network.num_classes:
        raise DimensionError(f"label {label} outside [0, {network.num_classes})")
    as_batch(image, network.input_shape)

    dtype = network.dtype
    channels = isolate_pixels(np.asarray(image, dtype=dtype), image_id)
    h, w = channels.shape
    pixels = channels.values.reshape(1, 1, h, w)
    init = np.ones if config.init == "ones" else np.zeros
    state = MixingState(
        alpha=init(channels.p, dtype=dtype),
        optimizer=SgdState(config=config.sgd()),
        shape=(h, w),
        label=label,
        image_id=image_id,
    )

    for step in range(1, config.steps + 1):
        tape = Tape()
        alpha = tape.watch(state.alpha.reshape(1, 1, h, w), name="alpha")
        try:
            blended = ops.multiply(alpha, pixels, layer="mixing")
            loss = _mixing_loss(network, blended, label, config.loss)
        except NumericError as e:
            raise NumericError(f"mixing fit for '{image_id}' failed at step {step}: {e}") from e
        value = float(loss.value)
        if not np.isfinite(value):
            raise NumericError(f"mixing fit for '{image_id}': non-finite loss at step {step}")

        grad = tape.gradients(loss, np.ones((), dtype=loss.value.dtype)).wrt(alpha).reshape(-1)
        updated, state.optimizer = sgd_step({"alpha": state.alpha}, {"alpha": grad}, state.optimizer)
        state.alpha = np.maximum(updated["alpha"], 0).astype(dtype, copy=False)
        state.optimizer.advance_epoch()
        state.step = step
        state.losses.append(value)
        if callback is not None:
            callback(step, value)
    return state


def extract_map(state: MixingState, h: int, w: int) -> AttributionMap:
    """Reshape the mixing weights into a pixel importance map."""
    if state.alpha.shape[0] != h * w:
        raise DimensionError(f"{state.alpha.shape[0]} mixing weights cannot form a {h}x{w} map")
    return AttributionMap(state.alpha.reshape(h, w).copy(), "pcim", state.image_id)


def pcim(
    network: Network,
    image: np.ndarray,
    label: int,
    config: FitConfig,
    image_id: str = ""
) -> Tuple[AttributionMap, MixingState]:
    """Fit the mixing weights and return the map with the fit state."""
    state = fit_mixing(network, image, label, config, image_id=image_id)
    h, w = state.shape
    return extract_map(state, h, w), state
