"""Method registry: one entry point computing any attribution map."""

import hashlib
from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from attribution.gradcam import grad_cam, grad_cam_pp
from attribution.gradients import IgConfig, integrated_gradients, saliency
from attribution.maps import METHODS, AttributionMap
from attribution.pcim import FitConfig, pcim
from attribution.rise import RiseConfig, rise
from core.network import Network
from dataset.images import LabeledImage
from utils.errors import DataError


def random_attribution(image: np.ndarray, seed: int, image_id: str = "") -> AttributionMap:
    """Seeded uniform values in [0, 1); a control with no model information."""
    rng = np.random.default_rng(seed)
    return AttributionMap(rng.random(np.shape(image)).astype(np.float32), "random", image_id)


def image_seed(seed: int, image_id: str) -> int:
    """Per-image seed derived from a run seed and the image id."""
    digest = hashlib.sha256(f"{seed}:{image_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class MethodSettings(BaseModel):
    """Parameters for every attribution method of a run."""

    fit: FitConfig = Field(default_factory=FitConfig)
    ig: IgConfig = Field(default_factory=IgConfig)
    rise: RiseConfig = Field(default_factory=RiseConfig)
    cam_target: Literal["logit", "probability"] = "logit"
    seed: int = 0


@dataclass
class MethodResult:
    map: AttributionMap
    losses: List[float] = field(default_factory=list)


def resolve_methods(names) -> List[str]:
    """Expand "all" and validate method names, keeping registry order."""
    names = list(names)
    if "all" in names:
        return list(METHODS)
    unknown = [name for name in names if name not in METHODS]
    if unknown:
        raise DataError(f"unknown attribution methods: {unknown}")
    return [name for name in METHODS if name in names]


def compute_map(
    method: str,
    network: Network,
    item: LabeledImage,
    settings: MethodSettings,
    class_index: Optional[int] = None
) -> MethodResult:
    """Attribution of one image for its ground-truth class (or class_index).

    Args:
        method: Registry name
        network: Frozen classifier
        item: Image to explain
        settings: Method parameters
        class_index: Overrides the explained class; PCIM always fits
            against the image's label

    Returns:
        The map, plus the loss trace for PCIM
    """
    target = item.label if class_index is None else class_index
    if method == "pcim":
        attribution, state = pcim(network, item.image, item.label, settings.fit, image_id=item.id)
        return MethodResult(attribution, state.losses)
    if method == "saliency":
        return MethodResult(saliency(network, item.image, target, image_id=item.id))
    if method == "intgrads":
        return MethodResult(integrated_gradients(network, item.image, target, settings.ig, image_id=item.id))
    if method == "rise":
        return MethodResult(rise(network, item.image, target, settings.rise, image_id=item.id))
    if method == "gradcam":
        return MethodResult(grad_cam(network, item.image, target, settings.cam_target, image_id=item.id))
    if method == "gradcampp":
        return MethodResult(grad_cam_pp(network, item.image, target, settings.cam_target, image_id=item.id))
    if method == "random":
        return MethodResult(random_attribution(item.image, image_seed(settings.seed, item.id), image_id=item.id))
    raise DataError(f"unknown attribution method '{method}'")
