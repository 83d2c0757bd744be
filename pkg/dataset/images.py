"""Labeled single-channel images and dataset fingerprints."""

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from utils.errors import DataError, DimensionError


@dataclass(eq=False)
class LabeledImage:
    """An h x w image in [0, 1] with its class label and optional mask."""

    id: str
    image: np.ndarray
    label: int
    mask: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float32)
        if self.image.ndim != 2:
            raise DimensionError(f"{self.id}: expected a 2-d image, got shape {self.image.shape}")
        if not np.all(np.isfinite(self.image)) or self.image.min() < 0 or self.image.max() > 1:
            raise DataError(f"{self.id}: pixel values must be finite and lie in [0, 1]")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.image.shape:
                raise DimensionError(f"{self.id}: mask shape {self.mask.shape} differs from image {self.image.shape}")

    @property
    def shape(self):
        return self.image.shape


def fingerprint(images: Iterable[LabeledImage]) -> str:
    """Order-independent SHA-256 over sorted "id<TAB>label" lines."""
    lines = sorted(f"{item.id}\t{item.label}" for item in images)
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def class_counts(images: Iterable[LabeledImage]) -> dict:
    counts: dict = {}
    for item in images:
        counts[item.label] = counts.get(item.label, 0) + 1
    return dict(sorted(counts.items()))


def stack(images: Iterable[LabeledImage]) -> np.ndarray:
    """Stack images into an (N, h, w) float32 array."""
    arrays = [item.image for item in images]
    if not arrays:
        raise DataError("no images to stack")
    return np.stack(arrays)
