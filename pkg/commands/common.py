"""Helpers shared by the pipeline commands."""

from pathlib import Path
from typing import List, Optional, Tuple

from classifier.checkpoint import Checkpoint, load_checkpoint
from dataset.images import LabeledImage
from dataset.io import load_image_dir, read_description
from utils.config import get_config
from utils.errors import DataError
from utils.logger import info


def output_dir(out: Optional[str], name: str) -> Path:
    """The --out directory, or <PCIM_OUTPUT_ROOT>/<name> when omitted."""
    path = Path(out) if out else get_config().default_output(name)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create output directory {path}: {e}") from e
    return path


def load_dataset(data_dir: str) -> Tuple[List[LabeledImage], int]:
    """Load a dataset directory and its declared class count."""
    path = Path(data_dir)
    if not path.is_dir():
        raise DataError(f"dataset directory not found: {path}")
    images = load_image_dir(path)
    if not images:
        raise DataError(f"dataset {path} lists no images")
    num_classes = read_description(path).get("num_classes") or max(item.label for item in images) + 1
    info(f"Loaded {len(images)} images from {path} ({num_classes} classes)")
    return images, int(num_classes)


def load_frozen(checkpoint_dir: str) -> Checkpoint:
    """Load a checkpoint and freeze its network."""
    path = Path(checkpoint_dir)
    if not path.is_dir():
        raise DataError(f"checkpoint directory not found: {path}")
    checkpoint = load_checkpoint(path)
    checkpoint.network.freeze()
    info(f"Loaded checkpoint from {path} (epoch {checkpoint.epoch}, validation loss {checkpoint.validation_loss:.4f})")
    return checkpoint


def threads(override: Optional[int] = None) -> int:
    if override:
        return override
    return get_config().resolved_threads()
