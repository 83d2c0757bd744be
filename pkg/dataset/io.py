"""Reading and writing image corpora on disk.

A dataset directory holds:

    manifest.csv   header "file,label,mask", paths relative to the directory
    dataset.yaml   optional description; "num_classes" declares the class set
    images/, masks/  portable graymaps (8- or 16-bit) or grayscale PNG
"""

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from PIL import Image, UnidentifiedImageError

from dataset.images import LabeledImage
from utils.errors import DataError, DimensionError, FormatError

MANIFEST_FILE = "manifest.csv"
DESCRIPTION_FILE = "dataset.yaml"

_SIXTEEN_BIT_MODES = {"I", "I;16", "I;16B", "I;16L"}


def read_image(path: Path) -> np.ndarray:
    """Decode a grayscale image to float32 in [0, 1].

    Values are divided by the format's maximum (255 for 8-bit, 65535 for
    16-bit), not by the image's own maximum.
    """
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode == "1":
                return np.asarray(img, dtype=np.float32)
            if mode in _SIXTEEN_BIT_MODES:
                data = np.asarray(img, dtype=np.float64) / 65535.0
            else:
                if mode != "L":
                    img = img.convert("L")
                data = np.asarray(img, dtype=np.float64) / 255.0
    except FileNotFoundError as e:
        raise DataError(f"image file not found: {path}") from e
    except (UnidentifiedImageError, OSError) as e:
        raise FormatError(f"cannot decode image {path}: {e}") from e
    return np.clip(data, 0.0, 1.0).astype(np.float32)


def read_mask(path: Path) -> np.ndarray:
    """Decode a mask image; any non-zero pixel is foreground."""
    return read_image(path) > 0


def write_graymap(values: np.ndarray, path: Path, bits: int = 16) -> None:
    """Write values in [0, 1] as a binary portable graymap."""
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    if bits == 16:
        Image.fromarray(np.round(values * 65535).astype(np.int32)).save(path, format="PPM")
    else:
        Image.fromarray(np.round(values * 255).astype(np.uint8)).save(path, format="PPM")


def read_description(path: Path) -> dict:
    description_file = Path(path) / DESCRIPTION_FILE
    if not description_file.exists():
        return {}
    with open(description_file, "r", encoding="utf-8") as f:
        try:
            return yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise FormatError(f"cannot parse {description_file}: {e}") from e


def load_image_dir(
    path: Path,
    manifest_file: str = MANIFEST_FILE,
    num_classes: Optional[int] = None
) -> List[LabeledImage]:
    """Load every image listed in a dataset manifest.

    Args:
        path: Dataset directory
        manifest_file: Manifest name inside the directory
        num_classes: Declared class count; defaults to dataset.yaml's value

    Returns:
        Labeled images with ids taken from the file stems
    """
    path = Path(path)
    manifest_path = path / manifest_file
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")

    try:
        manifest = pd.read_csv(manifest_path, dtype={"file": str, "mask": str}, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"cannot parse {manifest_path}: {e}") from e
    missing_cols = {"file", "label"} - set(manifest.columns)
    if missing_cols:
        raise FormatError(f"{manifest_path}: missing columns {sorted(missing_cols)}")

    if num_classes is None:
        num_classes = read_description(path).get("num_classes")

    images: List[LabeledImage] = []
    shape = None
    for row_idx, row in manifest.iterrows():
        entry = f"{manifest_file} row {row_idx + 2} ({row['file']})"
        try:
            label = int(row["label"])
        except (TypeError, ValueError) as e:
            raise DataError(f"{entry}: label '{row['label']}' is not an integer") from e
        if label < 0 or (num_classes is not None and label >= num_classes):
            raise DataError(f"{entry}: label {label} outside the declared class set")

        image_path = path / row["file"]
        if not image_path.exists():
            raise DataError(f"{entry}: image file missing: {image_path}")
        image = read_image(image_path)

        mask = None
        mask_name = row["mask"] if "mask" in manifest.columns else ""
        if mask_name:
            mask_path = path / mask_name
            if not mask_path.exists():
                raise DataError(f"{entry}: mask file missing: {mask_path}")
            mask = read_mask(mask_path)

        if shape is None:
            shape = image.shape
        elif image.shape != shape:
            raise DimensionError(f"{entry}: image shape {image.shape} differs from dataset shape {shape}")

        images.append(LabeledImage(id=Path(row["file"]).stem, image=image, label=label, mask=mask))

    ids = [item.id for item in images]
    if len(set(ids)) != len(ids):
        raise DataError(f"{manifest_path}: duplicate image ids")
    return images


def save_dataset(images: Sequence[LabeledImage], out_dir: Path, description: Optional[dict] = None) -> Path:
    """Write images, masks, manifest and description to out_dir.

    Returns:
        Path of the written manifest
    """
    out_dir = Path(out_dir)
    rows = []
    for item in images:
        image_rel = f"images/{item.id}.pgm"
        write_graymap(item.image, out_dir / image_rel, bits=16)
        mask_rel = ""
        if item.mask is not None:
            mask_rel = f"masks/{item.id}_mask.pgm"
            write_graymap(item.mask.astype(np.float64), out_dir / mask_rel, bits=8)
        rows.append({"file": image_rel, "label": item.label, "mask": mask_rel})

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_FILE
    pd.DataFrame(rows, columns=["file", "label", "mask"]).to_csv(manifest_path, index=False)
    if description is not None:
        with open(out_dir / DESCRIPTION_FILE, "w", encoding="utf-8") as f:
            yaml.safe_dump(description, f, sort_keys=False)
    return manifest_path
