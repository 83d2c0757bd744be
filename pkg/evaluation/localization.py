"""Localization of attributions against ground-truth foreground masks."""

import numpy as np

from evaluation.fidelity import pixel_order
from utils.errors import DataError, DimensionError, UndefinedMetricError


def _check(values: np.ndarray, mask: np.ndarray):
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if values.shape != mask.shape:
        raise DimensionError(f"map shape {values.shape} does not match mask shape {mask.shape}")
    return values, mask


def mass_accuracy(values: np.ndarray, mask: np.ndarray) -> float:
    """Share of the positive attribution mass that falls inside the mask."""
    values, mask = _check(values, mask)
    positive = np.maximum(values, 0)
    total = positive.sum()
    if total <= 0:
        raise UndefinedMetricError("mass accuracy is undefined for a map without positive attributions")
    return float(positive[mask].sum() / total)


def rank_accuracy(values: np.ndarray, mask: np.ndarray) -> float:
    """Share of the k top-ranked pixels inside the mask, k = mask size."""
    values, mask = _check(values, mask)
    k = int(mask.sum())
    if k == 0:
        raise DataError("rank accuracy needs a mask with at least one foreground pixel")
    top = pixel_order(values)[:k]
    return float(mask.reshape(-1)[top].sum() / k)
