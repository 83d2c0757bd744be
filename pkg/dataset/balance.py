"""Class balancing by random undersampling."""

from typing import List, Optional, Sequence

import numpy as np

from dataset.images import LabeledImage
from utils.errors import DataError


def undersample_balance(
    images: Sequence[LabeledImage],
    seed: int,
    num_classes: Optional[int] = None
) -> List[LabeledImage]:
    """Downsample every class to the minority-class count.

    Args:
        images: Input images
        seed: Seed for selection and final shuffle
        num_classes: Declared class count; every class must be present

    Returns:
        Balanced images in a seeded shuffled order
    """
    if not images:
        raise DataError("cannot balance an empty dataset")

    by_class: dict = {}
    for item in images:
        by_class.setdefault(item.label, []).append(item)
    if num_classes is not None:
        missing = [c for c in range(num_classes) if c not in by_class]
        if missing:
            raise DataError(f"classes without images: {missing}")

    keep = min(len(members) for members in by_class.values())
    rng = np.random.default_rng(seed)
    selected: List[LabeledImage] = []
    for label in sorted(by_class):
        members = by_class[label]
        picks = np.sort(rng.choice(len(members), size=keep, replace=False))
        selected.extend(members[i] for i in picks)

    order = rng.permutation(len(selected))
    return [selected[i] for i in order]
