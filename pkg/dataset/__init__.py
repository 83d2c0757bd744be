"""Labeled image datasets: ingestion, balancing and splitting."""

from .balance import undersample_balance
from .images import LabeledImage, class_counts, fingerprint, stack
from .io import load_image_dir, read_image, save_dataset, write_graymap
from .splits import DatasetSplits, SplitManifest, balanced_split, split

__all__ = [
    "DatasetSplits",
    "LabeledImage",
    "SplitManifest",
    "balanced_split",
    "class_counts",
    "fingerprint",
    "load_image_dir",
    "read_image",
    "save_dataset",
    "split",
    "stack",
    "undersample_balance",
    "write_graymap",
]
