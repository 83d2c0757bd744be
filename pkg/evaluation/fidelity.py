"""Deletion and insertion fidelity curves."""

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from attribution.maps import AttributionMap
from core.network import Network, as_batch, predict_batched
from dataset.images import LabeledImage
from utils.errors import ConfigError, DataError, DimensionError

Direction = Literal["deletion", "insertion"]


@dataclass
class FidelityCurve:
    """Class probability as a growing fraction of pixels is removed or revealed."""

    fractions: np.ndarray
    probabilities: np.ndarray
    direction: Direction
    image_id: str = ""
    method: str = ""

    def __len__(self) -> int:
        return self.fractions.shape[0]


def pixel_order(values: np.ndarray) -> np.ndarray:
    """Flat pixel indices by descending value; ties keep row-major order."""
    return np.argsort(-np.asarray(values, dtype=np.float64).reshape(-1), kind="stable")


def step_counts(p: int, step_fraction: float) -> np.ndarray:
    """Cumulative number of perturbed pixels at each curve point."""
    if not 0 < step_fraction <= 0.5:
        raise ConfigError(f"step fraction {step_fraction} outside (0, 0.5]")
    chunk = math.ceil(step_fraction * p)
    steps = math.ceil(p / chunk)
    return np.minimum(np.arange(steps + 1) * chunk, p)


def _endpoints(network: Network, image: np.ndarray, class_index: int) -> Tuple[float, float]:
    probs = predict_batched(network, np.stack([image, np.zeros_like(image)]))
    return float(probs[0, class_index]), float(probs[1, class_index])


def _curve(
    network: Network,
    item: LabeledImage,
    attribution: AttributionMap,
    step_fraction: float,
    direction: Direction,
    class_index: Optional[int]
) -> FidelityCurve:
    image = as_batch(item.image, network.input_shape)[0, 0].astype(network.dtype)
    if attribution.shape != image.shape:
        raise DimensionError(f"map shape {attribution.shape} does not match image shape {image.shape}")
    target = item.label if class_index is None else class_index
    p = image.size
    counts = step_counts(p, step_fraction)
    order = pixel_order(attribution.values)

    # rank[i] is the position of pixel i in the perturbation order
    rank = np.empty(p, dtype=np.int64)
    rank[order] = np.arange(p)
    touched = rank[None, :] < counts[1:-1, None]
    flat = image.reshape(-1)
    if direction == "deletion":
        probes = np.where(touched, 0, flat[None, :])
    else:
        probes = np.where(touched, flat[None, :], 0)

    original, blank = _endpoints(network, image, target)
    inner = predict_batched(network, probes.reshape(-1, *image.shape).astype(image.dtype))[:, target]
    first, last = (original, blank) if direction == "deletion" else (blank, original)
    probabilities = np.concatenate([[first], inner.astype(np.float64), [last]])
    return FidelityCurve(
        fractions=counts / p,
        probabilities=probabilities,
        direction=direction,
        image_id=item.id,
        method=attribution.method,
    )


def deletion_curve(
    network: Network,
    item: LabeledImage,
    attribution: AttributionMap,
    step_fraction: float = 0.02,
    class_index: Optional[int] = None
) -> FidelityCurve:
    """Zero pixels in descending attribution order, ceil(step_fraction * p) per step.

    The tracked probability is that of the image's ground-truth class
    unless class_index is given.
    """
    return _curve(network, item, attribution, step_fraction, "deletion", class_index)


def insertion_curve(
    network: Network,
    item: LabeledImage,
    attribution: AttributionMap,
    step_fraction: float = 0.02,
    class_index: Optional[int] = None
) -> FidelityCurve:
    """Reveal original pixels on a black canvas in descending attribution order."""
    return _curve(network, item, attribution, step_fraction, "insertion", class_index)


def auc(curve: FidelityCurve) -> float:
    """Trapezoidal area under the curve over the [0, 1] fraction axis."""
    if len(curve) < 2:
        raise DataError("a curve needs at least two points")
    span = curve.fractions[-1] - curve.fractions[0]
    return float(trapezoid(curve.probabilities, curve.fractions) / span)


def median_auc(
    network: Network,
    items: Sequence[LabeledImage],
    maps: Sequence[AttributionMap],
    direction: Direction,
    step_fraction: float = 0.02
) -> float:
    """Median per-image AUC; the mean of the middle two for even counts."""
    if len(items) != len(maps):
        raise DataError(f"{len(items)} images but {len(maps)} maps")
    if not items:
        raise DataError("no images to evaluate")
    curve_fn = deletion_curve if direction == "deletion" else insertion_curve
    aucs = [auc(curve_fn(network, item, m, step_fraction)) for item, m in zip(items, maps)]
    return float(np.median(aucs))
