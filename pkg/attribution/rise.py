"""Randomized input sampling: importance from randomly masked probes."""

from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field
from skimage.transform import resize

from attribution.maps import AttributionMap
from core.network import Network, as_batch, forward
from utils.errors import ConfigError
from utils.logger import warning


class RiseConfig(BaseModel):
    """Mask sampling parameters."""

    mask_count: int = Field(default=4000, ge=1)
    grid_size: int = Field(default=7, ge=1)
    keep_probability: float = Field(default=0.5, gt=0, le=1)
    seed: int = 0
    batch_size: int = Field(default=250, ge=1)


@lru_cache(maxsize=8)
def _cached_masks(mask_count: int, grid_size: int, keep: float, seed: int, shape: Tuple[int, int]) -> np.ndarray:
    h, w = shape
    rng = np.random.default_rng(seed)
    grid = (rng.random((mask_count, grid_size, grid_size)) < keep).astype(np.float64)
    cell_h = int(np.ceil(h / grid_size))
    cell_w = int(np.ceil(w / grid_size))

    if cell_h == 1 and cell_w == 1:
        # One grid cell per pixel: the masks are the Bernoulli grid itself.
        masks = grid[:, :h, :w]
    else:
        up_size = ((grid_size + 1) * cell_h, (grid_size + 1) * cell_w)
        masks = np.empty((mask_count, h, w))
        shifts = np.stack([rng.integers(0, cell_h, mask_count), rng.integers(0, cell_w, mask_count)], axis=1)
        for n in range(mask_count):
            up = resize(grid[n], up_size, order=1, mode="reflect", anti_aliasing=False)
            dy, dx = shifts[n]
            masks[n] = up[dy:dy + h, dx:dx + w]

    masks = np.ascontiguousarray(masks, dtype=np.float32)
    masks.flags.writeable = False
    return masks


def generate_masks(config: RiseConfig, shape: Tuple[int, int]) -> np.ndarray:
    """Seeded (N, h, w) soft masks; cached per configuration and shape.

    Each mask is an s x s Bernoulli(p) grid bilinearly upsampled to cells
    of ceil(h/s) x ceil(w/s) pixels and cropped at a random sub-cell shift.
    """
    h, w = shape
    if config.grid_size > min(h, w):
        raise ConfigError(f"grid size {config.grid_size} exceeds the image size {h}x{w}")
    return _cached_masks(config.mask_count, config.grid_size, config.keep_probability, config.seed, (h, w))


def rise(
    network: Network,
    image: np.ndarray,
    class_index: int,
    config: RiseConfig,
    image_id: str = ""
) -> AttributionMap:
    """importance_i = sum_n score_n * M_n(i) / (N * p), scored on class probability."""
    x = as_batch(image, network.input_shape).astype(network.dtype, copy=False)[0, 0]
    n, p = config.mask_count, config.keep_probability
    if n * p < 1:
        warning(f"RISE with {n} masks at keep probability {p} expects fewer than one visible sample per pixel")

    masks = generate_masks(config, x.shape)
    importance = np.zeros(x.shape, dtype=np.float64)
    for start in range(0, n, config.batch_size):
        chunk = masks[start:start + config.batch_size]
        probs, _ = forward(network, chunk * x[None])
        scores = probs[:, class_index].astype(np.float64)
        importance += np.tensordot(scores, chunk, axes=(0, 0))
    return AttributionMap((importance / (n * p)).astype(np.float32), "rise", image_id)
