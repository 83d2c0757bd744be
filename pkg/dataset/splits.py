"""Deterministic stratified train / validation / holdout splits."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel
from sklearn.model_selection import train_test_split

from dataset.balance import undersample_balance
from dataset.images import LabeledImage, class_counts, fingerprint
from utils.errors import DataError

HOLDOUT_RATIO = 0.2
VALIDATION_RATIO = 0.2
MIN_PER_CLASS = 5


class SplitManifest(BaseModel):
    """How a split was produced."""

    seed: int
    holdout_ratio: float = HOLDOUT_RATIO
    validation_ratio: float = VALIDATION_RATIO
    fingerprint: str
    counts: Dict[str, Dict[int, int]]


@dataclass
class DatasetSplits:
    """Disjoint train, validation and holdout sequences."""

    train: List[LabeledImage]
    validation: List[LabeledImage]
    holdout: List[LabeledImage]
    manifest: Optional[SplitManifest] = None

    def get(self, name: str) -> List[LabeledImage]:
        if name not in ("train", "validation", "holdout"):
            raise DataError(f"unknown split '{name}'")
        return getattr(self, name)


def _stratified(items: Sequence[LabeledImage], ratio: float, seed: int):
    labels = [item.label for item in items]
    return train_test_split(list(items), test_size=ratio, stratify=labels, random_state=seed % (2 ** 32))


def split(images: Sequence[LabeledImage], seed: int) -> DatasetSplits:
    """Stratified 80/20 holdout split, then 80/20 train/validation.

    Args:
        images: Balanced images
        seed: Seed for both splits

    Returns:
        Dataset splits with their manifest
    """
    counts = class_counts(images)
    if not counts:
        raise DataError("cannot split an empty dataset")
    small = {label: n for label, n in counts.items() if n < MIN_PER_CLASS}
    if small:
        raise DataError(f"classes too small to stratify (need >= {MIN_PER_CLASS} images): {small}")

    pool, holdout = _stratified(images, HOLDOUT_RATIO, seed)
    train, validation = _stratified(pool, VALIDATION_RATIO, seed)

    manifest = SplitManifest(
        seed=seed,
        fingerprint=fingerprint(images),
        counts={
            "train": class_counts(train),
            "validation": class_counts(validation),
            "holdout": class_counts(holdout),
        },
    )
    return DatasetSplits(train=train, validation=validation, holdout=holdout, manifest=manifest)


def balanced_split(images: Sequence[LabeledImage], seed: int, num_classes: Optional[int] = None) -> DatasetSplits:
    """Undersample to equal class counts, then split, both with the same seed."""
    return split(undersample_balance(images, seed, num_classes), seed)
