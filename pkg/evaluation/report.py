"""Evaluation report: per-image scores, medians, similarity and linkage."""

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from attribution.maps import AttributionMap
from core.network import Network
from dataset.images import LabeledImage
from evaluation.clustering import LinkageTrace, cluster_methods
from evaluation.fidelity import FidelityCurve, auc, deletion_curve, insertion_curve
from evaluation.localization import mass_accuracy, rank_accuracy
from evaluation.similarity import nearest_neighbors, similarity_matrix
from utils.errors import DataError, UndefinedMetricError
from utils.logger import warning
from utils.parallel import parallel_map


class ImageScores(BaseModel):
    image_id: str
    label: int
    method: str
    deletion_auc: float
    insertion_auc: float
    mass_accuracy: Optional[float] = None
    rank_accuracy: Optional[float] = None


class MethodSummary(BaseModel):
    """Medians over the evaluated images of one method."""

    count: int
    deletion_auc: float
    insertion_auc: float
    mass_accuracy: Optional[float] = None
    rank_accuracy: Optional[float] = None
    undefined_mass: int = 0


class ClassSummary(BaseModel):
    count: int
    deletion_auc: float
    insertion_auc: float


class SimilaritySection(BaseModel):
    methods: List[str]
    matrix: List[List[float]]
    nearest: Dict[str, Tuple[str, float]]


class MergeRecord(BaseModel):
    left: List[str]
    right: List[str]
    height: float


class EvalReport(BaseModel):
    """Everything the evaluate command measures, JSON-serializable."""

    methods: List[str]
    step_fraction: float
    localization: bool
    summary: Dict[str, MethodSummary]
    per_class: Dict[str, Dict[str, ClassSummary]]
    per_image: List[ImageScores]
    similarity: Optional[SimilaritySection] = None
    linkage: Optional[List[MergeRecord]] = None
    manifest: Dict[str, str] = {}


def _median(values: Sequence[float]) -> Optional[float]:
    return float(np.median(values)) if len(values) else None


def score_image(
    network: Network,
    item: LabeledImage,
    attribution: AttributionMap,
    step_fraction: float,
    localization: bool
) -> Tuple[ImageScores, List[FidelityCurve]]:
    """All per-image metrics for one map."""
    deletion = deletion_curve(network, item, attribution, step_fraction)
    insertion = insertion_curve(network, item, attribution, step_fraction)
    scores = ImageScores(
        image_id=item.id,
        label=item.label,
        method=attribution.method,
        deletion_auc=auc(deletion),
        insertion_auc=auc(insertion),
    )
    if localization:
        if item.mask is None:
            raise DataError(f"masks required for localization: image '{item.id}' has none")
        try:
            scores.mass_accuracy = mass_accuracy(attribution.values, item.mask)
        except UndefinedMetricError:
            scores.mass_accuracy = None
        scores.rank_accuracy = rank_accuracy(attribution.values, item.mask)
    return scores, [deletion, insertion]


def summarize(scores: Sequence[ImageScores], localization: bool) -> MethodSummary:
    """Medians of one method's per-image scores; undefined mass values are excluded."""
    mass = [s.mass_accuracy for s in scores if s.mass_accuracy is not None]
    return MethodSummary(
        count=len(scores),
        deletion_auc=_median([s.deletion_auc for s in scores]),
        insertion_auc=_median([s.insertion_auc for s in scores]),
        mass_accuracy=_median(mass) if localization else None,
        rank_accuracy=_median([s.rank_accuracy for s in scores]) if localization else None,
        undefined_mass=len(scores) - len(mass) if localization else 0,
    )


def build_report(
    network: Network,
    items: Sequence[LabeledImage],
    maps: Mapping[str, Mapping[str, AttributionMap]],
    step_fraction: float = 0.02,
    localization: bool = False,
    threads: int = 1,
    on_done=None
) -> Tuple[EvalReport, List[FidelityCurve]]:
    """Evaluate every method's maps over the images they cover.

    Args:
        network: Frozen classifier
        items: Images, matched to maps by id
        maps: Maps keyed by method, then by image id
        step_fraction: Curve step size as a fraction of the pixels
        localization: Also compute mass and rank accuracy (needs masks)
        threads: Worker threads for per-image scoring
        on_done: Called after each scored (image, method) pair

    Returns:
        The report and every computed curve
    """
    if not maps:
        raise DataError("no attribution maps to evaluate")
    by_id = {item.id: item for item in items}
    jobs = []
    for method in sorted(maps):
        for image_id in sorted(maps[method]):
            if image_id not in by_id:
                raise DataError(f"map '{image_id}_{method}' has no matching image in the dataset")
            jobs.append((by_id[image_id], maps[method][image_id]))
    if localization:
        unmasked = sorted({item.id for item, _ in jobs if item.mask is None})
        if unmasked:
            raise DataError(f"masks required for localization: {len(unmasked)} images have no mask")

    results = parallel_map(
        lambda job: score_image(network, job[0], job[1], step_fraction, localization),
        jobs,
        threads=threads,
        on_done=on_done,
    )
    per_image = [scores for scores, _ in results]
    curves = [curve for _, pair in results for curve in pair]

    summary: Dict[str, MethodSummary] = {}
    per_class: Dict[str, Dict[str, ClassSummary]] = {}
    for method in sorted(maps):
        method_scores = [s for s in per_image if s.method == method]
        summary[method] = summarize(method_scores, localization)
        if summary[method].undefined_mass:
            warning(f"{method}: mass accuracy undefined for {summary[method].undefined_mass} images, excluded from the median")
        per_class[method] = {}
        for label in sorted({s.label for s in method_scores}):
            class_scores = [s for s in method_scores if s.label == label]
            per_class[method][str(label)] = ClassSummary(
                count=len(class_scores),
                deletion_auc=_median([s.deletion_auc for s in class_scores]),
                insertion_auc=_median([s.insertion_auc for s in class_scores]),
            )

    report = EvalReport(
        methods=sorted(maps),
        step_fraction=step_fraction,
        localization=localization,
        summary=summary,
        per_class=per_class,
        per_image=per_image,
    )
    if len(maps) >= 2 and all(set(m) == set(next(iter(maps.values()))) for m in maps.values()):
        attach_similarity(report, maps, threads=threads)
    return report, curves


def attach_similarity(report: EvalReport, maps, threads: int = 1) -> LinkageTrace:
    """Add the median-SSIM matrix and its linkage trace to a report."""
    matrix = similarity_matrix(maps, threads=threads)
    trace = cluster_methods(matrix)
    report.similarity = SimilaritySection(
        methods=matrix.methods,
        matrix=matrix.values.tolist(),
        nearest=nearest_neighbors(matrix),
    )
    report.linkage = [MergeRecord(left=list(m.left), right=list(m.right), height=m.height) for m in trace.merges]
    return trace


def table_rows(report: EvalReport) -> Tuple[List[str], List[List[str]]]:
    """Columns and formatted rows: Deletion (lower is better) first, then Insertion."""
    columns = ["Method", "Deletion ↓", "Insertion ↑"]
    if report.localization:
        columns += ["Mass acc. ↑", "Rank acc. ↑"]
    rows = []
    for method in report.methods:
        s = report.summary[method]
        row = [method, f"{s.deletion_auc:.3f}", f"{s.insertion_auc:.3f}"]
        if report.localization:
            row += [
                "n/a" if s.mass_accuracy is None else f"{s.mass_accuracy:.3f}",
                "n/a" if s.rank_accuracy is None else f"{s.rank_accuracy:.3f}",
            ]
        rows.append(row)
    return columns, rows


def write_report(report: EvalReport, curves: Sequence[FidelityCurve], out_dir: Path) -> Tuple[Path, Path]:
    """Write report.json and the long-form curves.csv.

    Returns:
        Paths of the report and the curve table
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")

    frames = [
        pd.DataFrame({
            "image_id": curve.image_id,
            "method": curve.method,
            "direction": curve.direction,
            "fraction": curve.fractions,
            "probability": curve.probabilities,
        })
        for curve in curves
    ]
    curves_path = out_dir / "curves.csv"
    columns = ["image_id", "method", "direction", "fraction", "probability"]
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)
    table.to_csv(curves_path, index=False, float_format="%.9g")
    return report_path, curves_path
