"""Command to score attribution maps."""

from pathlib import Path
from typing import Optional

from attribution import load_map_dir
from commands.common import load_dataset, load_frozen, output_dir, threads as worker_threads
from evaluation import build_report, table_rows, write_report
from utils.logger import create_progress, info, section, success, table
from utils.manifest import RunManifest, write_run_manifest


def evaluate_command(
    checkpoint: str,
    data: str,
    maps: str,
    step_fraction: float = 0.02,
    localization: bool = False,
    threads: Optional[int] = None,
    out: Optional[str] = None
) -> Path:
    """Deletion / insertion AUC and optional localization accuracy per method."""
    section("Evaluating Attribution Maps")

    ckpt = load_frozen(checkpoint)
    images, _ = load_dataset(data)
    by_method = load_map_dir(Path(maps))
    total = sum(len(m) for m in by_method.values())
    info(f"Loaded {total} maps for methods: {', '.join(by_method)}")

    with create_progress() as progress:
        task = progress.add_task("Scoring maps...", total=total)
        report, curves = build_report(
            ckpt.network,
            images,
            by_method,
            step_fraction=step_fraction,
            localization=localization,
            threads=worker_threads(threads),
            on_done=lambda _: progress.advance(task),
        )

    report.manifest = {
        "checkpoint_checksum": ckpt.network.checksum(),
        "dataset_fingerprint": ckpt.dataset_fingerprint,
    }
    out_dir = output_dir(out, "evaluation")
    report_path, curves_path = write_report(report, curves, out_dir)

    columns, rows = table_rows(report)
    table("Performance of pixel attribution methods", columns, rows)
    if report.similarity is not None:
        for method, (other, value) in report.similarity.nearest.items():
            info(f"  {method}: most similar to {other} (median SSIM {value:.3f})")

    write_run_manifest(RunManifest(
        command="evaluate",
        flags={"step_fraction": step_fraction, "localization": localization},
        inputs={"checkpoint": str(checkpoint), "data": str(data), "maps": str(maps)},
        output=str(out_dir),
        checkpoint_checksum=ckpt.network.checksum(),
        dataset_fingerprint=ckpt.dataset_fingerprint,
    ), out_dir)

    success(f"Report saved to: {report_path}")
    info(f"  Curves: {curves_path}")
    return out_dir
