"""Average-linkage clustering of methods by their similarity profiles."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.cluster.hierarchy import linkage

from evaluation.similarity import SimilarityMatrix
from utils.errors import DataError


@dataclass
class Merge:
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    height: float

    @property
    def members(self) -> Tuple[str, ...]:
        return tuple(sorted(self.left + self.right))


@dataclass
class LinkageTrace:
    """Merges in order of increasing height."""

    methods: List[str]
    merges: List[Merge]
    matrix: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                "step": step,
                "left": "+".join(merge.left),
                "right": "+".join(merge.right),
                "height": merge.height,
                "size": len(merge.members),
            }
            for step, merge in enumerate(self.merges, 1)
        ])


def cluster_methods(matrix: SimilarityMatrix) -> LinkageTrace:
    """Cluster the matrix rows with Euclidean distance and average linkage.

    Rows are ordered by method name before clustering, which fixes the
    tie-breaking between equal distances.
    """
    if len(matrix.methods) < 2:
        raise DataError("clustering needs at least two methods")
    values = np.asarray(matrix.values, dtype=np.float64)
    if values.shape != (len(matrix.methods),) * 2 or not np.allclose(values, values.T):
        raise DataError("similarity matrix must be square and symmetric")

    order = sorted(range(len(matrix.methods)), key=lambda i: matrix.methods[i])
    methods = [matrix.methods[i] for i in order]
    rows = values[np.ix_(order, order)]
    z = linkage(rows, method="average", metric="euclidean")

    clusters: List[Tuple[str, ...]] = [(m,) for m in methods]
    merges: List[Merge] = []
    for left_idx, right_idx, height, _ in z:
        left, right = clusters[int(left_idx)], clusters[int(right_idx)]
        if right < left:
            left, right = right, left
        merges.append(Merge(left=left, right=right, height=float(height)))
        clusters.append(tuple(sorted(left + right)))
    return LinkageTrace(methods=methods, merges=merges, matrix=z)
