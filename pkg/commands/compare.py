"""Command to compare attribution methods by structural similarity."""

from pathlib import Path
from typing import Optional

import pandas as pd

from attribution import load_map_dir
from commands.common import output_dir, threads as worker_threads
from evaluation import cluster_methods, nearest_neighbors, similarity_matrix
from utils.errors import DataError
from utils.logger import info, section, success, table
from utils.manifest import RunManifest, write_run_manifest


def compare_command(maps: str, threads: Optional[int] = None, out: Optional[str] = None) -> Path:
    """Write the median-SSIM matrix, its linkage trace and nearest neighbors."""
    section("Comparing Attribution Methods")

    by_method = load_map_dir(Path(maps))
    if len(by_method) < 2:
        raise DataError(f"comparison needs maps from at least two methods, found {list(by_method)}")

    matrix = similarity_matrix(by_method, threads=worker_threads(threads))
    trace = cluster_methods(matrix)
    nearest = nearest_neighbors(matrix)

    out_dir = output_dir(out, "compare")
    matrix.to_frame().to_csv(out_dir / "similarity.csv", float_format="%.9g")
    trace.to_frame().to_csv(out_dir / "linkage.csv", index=False, float_format="%.9g")
    pd.DataFrame(
        [{"method": m, "nearest": other, "ssim": value} for m, (other, value) in nearest.items()]
    ).to_csv(out_dir / "nearest.csv", index=False, float_format="%.9g")

    table(
        "Median SSIM",
        ["Method", *matrix.methods],
        [[m, *(f"{v:.3f}" for v in row)] for m, row in zip(matrix.methods, matrix.values)],
    )
    for step, merge in enumerate(trace.merges, 1):
        info(f"  merge {step}: {'+'.join(merge.left)} | {'+'.join(merge.right)} at {merge.height:.4f}")

    write_run_manifest(RunManifest(
        command="compare",
        inputs={"maps": str(maps)},
        output=str(out_dir),
    ), out_dir)

    success(f"Similarity matrix saved to: {out_dir / 'similarity.csv'}")
    return out_dir
