"""Attribution maps and their on-disk form.

Each map is stored twice under the same stem ``<imageid>_<method>``:

    .csv   h rows of w comma-separated raw values
    .pgm   16-bit portable graymap of the min-max normalized map
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Literal, Tuple

import numpy as np
import pandas as pd

from dataset.io import write_graymap
from utils.errors import DataError, DimensionError, FormatError
from utils.logger import debug

METHODS = ("pcim", "saliency", "rise", "gradcam", "gradcampp", "intgrads", "random")

ValueRange = Literal["raw", "normalized"]


@dataclass(eq=False)
class AttributionMap:
    """Per-pixel importance for one image, tagged with its method."""

    values: np.ndarray
    method: str
    image_id: str = ""
    value_range: ValueRange = "raw"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise DimensionError(f"attribution map must be 2-d, got shape {self.values.shape}")
        if self.method not in METHODS:
            raise DataError(f"unknown attribution method '{self.method}'")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def stem(self) -> str:
        return f"{self.image_id}_{self.method}"

    def normalized(self) -> "AttributionMap":
        """Linear min-max rescale to [0, 1]; constant maps become all zeros."""
        values = self.values.astype(np.float64)
        low, high = values.min(), values.max()
        if high > low:
            scaled = (values - low) / (high - low)
        else:
            scaled = np.zeros_like(values)
        return AttributionMap(scaled, self.method, self.image_id, "normalized")


def save_map(attribution: AttributionMap, out_dir: Path) -> Tuple[Path, Path]:
    """Write the CSV and graymap files of a map.

    Returns:
        Paths of the CSV and the graymap
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{attribution.stem}.csv"
    pgm_path = out_dir / f"{attribution.stem}.pgm"
    pd.DataFrame(attribution.values).to_csv(csv_path, header=False, index=False, float_format="%.9g")
    write_graymap(attribution.normalized().values, pgm_path, bits=16)
    return csv_path, pgm_path


def parse_stem(stem: str) -> Tuple[str, str]:
    """Split ``<imageid>_<method>`` into its parts."""
    image_id, sep, method = stem.rpartition("_")
    if not sep or not image_id or method not in METHODS:
        raise FormatError(f"'{stem}' is not named <imageid>_<method>")
    return image_id, method


def load_map(path: Path) -> AttributionMap:
    """Read a map CSV; image id and method come from the file name."""
    path = Path(path)
    image_id, method = parse_stem(path.stem)
    try:
        frame = pd.read_csv(path, header=None)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"cannot parse map {path}: {e}") from e
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"map {path} holds non-numeric values: {e}") from e
    if not np.all(np.isfinite(values)):
        raise FormatError(f"map {path} holds non-numeric or non-finite values")
    return AttributionMap(values, method, image_id)


def load_map_dir(path: Path) -> Dict[str, Dict[str, AttributionMap]]:
    """Load every map CSV in a directory.

    Files whose names do not end in a known method tag (loss traces,
    curve tables) are skipped.

    Returns:
        Maps keyed by method, then by image id
    """
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"map directory not found: {path}")
    maps: Dict[str, Dict[str, AttributionMap]] = {}
    for csv_path in sorted(path.glob("*.csv")):
        try:
            image_id, method = parse_stem(csv_path.stem)
        except FormatError:
            debug(f"skipping {csv_path.name}")
            continue
        maps.setdefault(method, {})[image_id] = load_map(csv_path)
    if not maps:
        raise DataError(f"no attribution maps in {path}")
    return dict(sorted(maps.items()))
