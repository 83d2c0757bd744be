"""Structural similarity between attribution maps."""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter

from attribution.maps import AttributionMap
from utils.errors import DataError, DimensionError
from utils.parallel import parallel_map

SIGMA = 1.5
TRUNCATE = 2.0
# Gaussian support radius: 7 x 7 windows at sigma 1.5
RADIUS = int(TRUNCATE * SIGMA + 0.5)
C1 = 0.01 ** 2
C2 = 0.03 ** 2


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean Gaussian-windowed SSIM of two maps on a unit dynamic range.

    Windows that would extend past the border are excluded from the mean.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare maps of shapes {a.shape} and {b.shape}")
    window = 2 * RADIUS + 1
    if a.ndim != 2 or min(a.shape) < window:
        raise DataError(f"maps of shape {a.shape} are smaller than the {window}x{window} window")

    def blur(x: np.ndarray) -> np.ndarray:
        return gaussian_filter(x, sigma=SIGMA, truncate=TRUNCATE, mode="reflect")

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + C1) * (2 * cov + C2)
    denominator = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)
    local = numerator / denominator
    return float(local[RADIUS:-RADIUS, RADIUS:-RADIUS].mean())


@dataclass
class SimilarityMatrix:
    """Median SSIM for every pair of methods, rows in method-name order."""

    methods: List[str]
    values: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.methods, columns=self.methods)


def similarity_matrix(
    maps: Mapping[str, Mapping[str, AttributionMap]],
    threads: int = 1
) -> SimilarityMatrix:
    """Median over images of the SSIM between normalized maps of each method pair.

    Args:
        maps: Maps keyed by method, then by image id
        threads: Worker threads for the pairwise comparisons

    Returns:
        Symmetric matrix with an exact 1.0 diagonal
    """
    methods = sorted(maps)
    if not methods:
        raise DataError("no maps to compare")
    image_ids = sorted(set().union(*(maps[m].keys() for m in methods)))
    for method in methods:
        missing = [i for i in image_ids if i not in maps[method]]
        if missing:
            raise DataError(f"method '{method}' has no map for images {missing[:5]}")

    normalized = {m: {i: maps[m][i].normalized().values for i in image_ids} for m in methods}
    pairs = [(i, j) for i in range(len(methods)) for j in range(i + 1, len(methods))]

    def pair_median(pair: Tuple[int, int]) -> float:
        ma, mb = methods[pair[0]], methods[pair[1]]
        return float(np.median([ssim(normalized[ma][i], normalized[mb][i]) for i in image_ids]))

    values = np.eye(len(methods))
    for (i, j), value in zip(pairs, parallel_map(pair_median, pairs, threads=threads)):
        values[i, j] = values[j, i] = value
    return SimilarityMatrix(methods=methods, values=values)


def nearest_neighbors(matrix: SimilarityMatrix) -> Dict[str, Tuple[str, float]]:
    """Most similar other method for each method; ties go to the earlier name."""
    result: Dict[str, Tuple[str, float]] = {}
    for i, method in enumerate(matrix.methods):
        best = None
        for j, other in enumerate(matrix.methods):
            if i != j and (best is None or matrix.values[i, j] > matrix.values[i, best]):
                best = j
        if best is not None:
            result[method] = (matrix.methods[best], float(matrix.values[i, best]))
    return result
