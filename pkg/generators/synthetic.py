"""Generate synthetic single-channel phenotype images with foreground masks."""

from pathlib import Path
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from dataset.images import LabeledImage, fingerprint
from dataset.io import save_dataset

CLASS_NAMES = {0: "diffuse", 1: "punctate", 2: "ring"}


class SynthConfig(BaseModel):
    """Synthetic dataset parameters."""

    image_size: int = Field(default=32, ge=16)
    samples_per_class: int = Field(default=400, gt=0)
    num_classes: Literal[2, 3] = 2
    dot_count: Tuple[int, int] = (3, 8)
    dot_sigma: Tuple[float, float] = (0.8, 1.5)
    axis_fraction: Tuple[float, float] = (0.24, 0.38)
    noise: float = Field(default=0.05, ge=0, lt=0.2)
    seed: int = 0

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthConfig":
        for name in ("dot_count", "dot_sigma", "axis_fraction"):
            low, high = getattr(self, name)
            if low <= 0 or high < low:
                raise ValueError(f"{name} must be a positive (low, high) range, got {(low, high)}")
        if self.axis_fraction[1] >= 0.5:
            raise ValueError("axis_fraction upper bound must stay below 0.5")
        return self


class SyntheticGenerator:
    """Render diffuse, punctate and ring phenotypes inside an elliptical cell."""

    # Dots and rings are confined to this normalized radius of the ellipse.
    INNER_RADIUS = 0.65

    def __init__(self, config: SynthConfig):
        """Initialize the generator.

        Args:
            config: Synthetic dataset parameters
        """
        self.config = config
        size = config.image_size
        self.rows, self.cols = np.mgrid[0:size, 0:size].astype(np.float64)

    def _cell(self, rng: np.random.Generator) -> dict:
        size = self.config.image_size
        low, high = self.config.axis_fraction
        cy, cx = size / 2 + rng.uniform(-0.08, 0.08, size=2) * size
        a, b = np.sort(rng.uniform(low, high, size=2) * size)[::-1]
        theta = rng.uniform(0, np.pi)
        dy, dx = self.rows - cy, self.cols - cx
        u = dx * np.cos(theta) + dy * np.sin(theta)
        v = -dx * np.sin(theta) + dy * np.cos(theta)
        radius = np.sqrt((u / a) ** 2 + (v / b) ** 2)
        return {"center": (cy, cx), "axes": (a, b), "theta": theta, "radius": radius}

    def _inner_point(self, rng: np.random.Generator, cell: dict) -> Tuple[float, float]:
        cy, cx = cell["center"]
        a, b = cell["axes"]
        theta = cell["theta"]
        rho = self.INNER_RADIUS * np.sqrt(rng.uniform())
        phi = rng.uniform(0, 2 * np.pi)
        u, v = rho * a * np.cos(phi), rho * b * np.sin(phi)
        row = cy + u * np.sin(theta) + v * np.cos(theta)
        col = cx + u * np.cos(theta) - v * np.sin(theta)
        return float(row), float(col)

    def render(self, label: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, dict]:
        """Render one image of the given class.

        Args:
            label: 0 diffuse, 1 punctate, 2 ring
            rng: Random generator, advanced in place

        Returns:
            Image in [0, 1], foreground mask, and rendering metadata
        """
        cell = self._cell(rng)
        radius = cell["radius"]
        mask = radius <= 1.0
        level = rng.uniform(0.30, 0.45)
        image = level / (1.0 + np.exp((radius - 1.0) * 12.0))
        meta: dict = {"class_name": CLASS_NAMES[label]}

        if label == 1:
            low, high = self.config.dot_count
            centers = []
            for _ in range(int(rng.integers(low, high + 1))):
                row, col = self._inner_point(rng, cell)
                sigma = rng.uniform(*self.config.dot_sigma)
                amplitude = rng.uniform(0.35, 0.55)
                dist2 = (self.rows - row) ** 2 + (self.cols - col) ** 2
                image = image + amplitude * np.exp(-dist2 / (2 * sigma ** 2))
                centers.append((row, col))
            meta["dot_centers"] = centers
        elif label == 2:
            ring_radius = rng.uniform(0.45, 0.6)
            width = rng.uniform(0.08, 0.12)
            amplitude = rng.uniform(0.35, 0.5)
            image = image + amplitude * np.exp(-((radius - ring_radius) ** 2) / (2 * width ** 2))
            meta["ring_radius"] = ring_radius

        if self.config.noise > 0:
            image = image + rng.normal(0.0, self.config.noise, size=image.shape)
        return np.clip(image, 0.0, 1.0).astype(np.float32), mask, meta

    def generate(self) -> List[LabeledImage]:
        """Generate the full dataset, class by class."""
        rng = np.random.default_rng(self.config.seed)
        images: List[LabeledImage] = []
        for label in range(self.config.num_classes):
            for idx in range(self.config.samples_per_class):
                image, mask, meta = self.render(label, rng)
                images.append(LabeledImage(
                    id=f"synth_c{label}_{idx:04d}",
                    image=image,
                    label=label,
                    mask=mask,
                    meta=meta,
                ))
        return images

    def save_to_dir(self, images: List[LabeledImage], out_dir: Path) -> Path:
        """Write the dataset and its description to out_dir.

        Args:
            images: Generated images
            out_dir: Target directory

        Returns:
            Path of the written manifest
        """
        description = {
            "source": "synthetic",
            "num_classes": self.config.num_classes,
            "class_names": [CLASS_NAMES[c] for c in range(self.config.num_classes)],
            "image_size": self.config.image_size,
            "config": self.config.model_dump(mode="json"),
            "fingerprint": fingerprint(images),
        }
        return save_dataset(images, out_dir, description)


def generate_synthetic(config: SynthConfig) -> List[LabeledImage]:
    """Generate a synthetic labeled dataset with foreground masks."""
    return SyntheticGenerator(config).generate()
