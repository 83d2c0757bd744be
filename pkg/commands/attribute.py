"""Command to compute attribution maps for a dataset split."""

from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from attribution import MethodSettings, compute_map, resolve_methods, save_map
from classifier import verify_fingerprint
from commands.common import load_dataset, load_frozen, output_dir, threads as worker_threads
from dataset.splits import balanced_split
from utils.errors import DimensionError, StateError
from utils.logger import create_progress, info, section, success
from utils.manifest import RunManifest, write_run_manifest
from utils.parallel import parallel_map


def attribute_command(
    checkpoint: str,
    data: str,
    methods: Sequence[str] = ("all",),
    split: str = "holdout",
    settings: Optional[MethodSettings] = None,
    limit: Optional[int] = None,
    threads: Optional[int] = None,
    out: Optional[str] = None
) -> Path:
    """Write one CSV and one graymap per (image, method)."""
    section("Computing Attribution Maps")

    settings = settings or MethodSettings()
    names = resolve_methods(methods)
    ckpt = load_frozen(checkpoint)
    network = ckpt.network
    images, num_classes = load_dataset(data)

    if tuple(images[0].shape) != tuple(network.input_shape):
        raise DimensionError(f"dataset images are {images[0].shape}, checkpoint expects {network.input_shape}")
    if num_classes != network.num_classes:
        raise DimensionError(f"dataset declares {num_classes} classes, checkpoint has {network.num_classes}")

    split_seed = int((ckpt.split or {}).get("seed", 0))
    splits = balanced_split(images, split_seed, num_classes)
    verify_fingerprint(ckpt, splits.manifest.fingerprint)
    items = splits.get(split)
    if limit is not None:
        items = items[:limit]

    out_dir = output_dir(out, "maps")
    checksum = network.checksum()
    jobs = [(method, item) for item in items for method in names]
    info(f"{len(items)} {split} images x {len(names)} methods: {', '.join(names)}")

    def run(job):
        method, item = job
        result = compute_map(method, network, item, settings)
        save_map(result.map, out_dir)
        if result.losses:
            pd.DataFrame({"step": range(1, len(result.losses) + 1), "loss": result.losses}).to_csv(
                out_dir / f"{item.id}_pcim_loss.csv", index=False, float_format="%.9g"
            )
        return method

    with create_progress() as progress:
        task = progress.add_task("Attributing...", total=len(jobs))
        parallel_map(run, jobs, threads=worker_threads(threads), on_done=lambda _: progress.advance(task))

    if network.checksum() != checksum:
        raise StateError("network weights changed during attribution")

    write_run_manifest(RunManifest(
        command="attribute",
        flags={"methods": names, "split": split, "limit": limit, "settings": settings.model_dump(mode="json")},
        seeds={"seed": settings.seed, "split_seed": split_seed, "rise_seed": settings.rise.seed},
        inputs={"checkpoint": str(checkpoint), "data": str(data)},
        output=str(out_dir),
        checkpoint_checksum=checksum,
        dataset_fingerprint=splits.manifest.fingerprint,
    ), out_dir)

    success(f"Wrote {len(jobs)} maps to {out_dir}")
    info(f"\nNext step: Run 'python main.py evaluate --checkpoint {checkpoint} --data {data} --maps {out_dir}'")
    return out_dir
