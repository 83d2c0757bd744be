"""Fidelity, localization and similarity metrics for attribution maps."""

from .clustering import LinkageTrace, Merge, cluster_methods
from .fidelity import FidelityCurve, auc, deletion_curve, insertion_curve, median_auc, pixel_order
from .localization import mass_accuracy, rank_accuracy
from .report import EvalReport, build_report, table_rows, write_report
from .similarity import SimilarityMatrix, nearest_neighbors, similarity_matrix, ssim

__all__ = [
    "EvalReport",
    "FidelityCurve",
    "LinkageTrace",
    "Merge",
    "SimilarityMatrix",
    "auc",
    "build_report",
    "cluster_methods",
    "deletion_curve",
    "insertion_curve",
    "mass_accuracy",
    "median_auc",
    "nearest_neighbors",
    "pixel_order",
    "rank_accuracy",
    "similarity_matrix",
    "ssim",
    "table_rows",
    "write_report",
]
