"""Command to generate a synthetic dataset."""

from pathlib import Path
from typing import Optional

from commands.common import output_dir
from dataset.images import class_counts, fingerprint
from generators import SynthConfig, SyntheticGenerator
from utils.logger import create_progress, info, section, success
from utils.manifest import RunManifest, write_run_manifest


def gen_data_command(
    size: int = 32,
    per_class: int = 400,
    classes: int = 2,
    seed: int = 0,
    noise: float = 0.05,
    out: Optional[str] = None
) -> Path:
    """Generate synthetic images with masks and write them as a dataset directory."""
    section("Generating Synthetic Dataset")

    config = SynthConfig(image_size=size, samples_per_class=per_class, num_classes=classes, noise=noise, seed=seed)
    generator = SyntheticGenerator(config)
    out_dir = output_dir(out, "data")

    info(f"Rendering {per_class} images per class for {classes} classes ({size}x{size})...")
    with create_progress() as progress:
        progress.add_task("Rendering images...", total=None)
        images = generator.generate()
        generator.save_to_dir(images, out_dir)
        progress.stop()

    data_fingerprint = fingerprint(images)
    write_run_manifest(RunManifest(
        command="gen-data",
        flags={"size": size, "per_class": per_class, "classes": classes, "noise": noise},
        seeds={"seed": seed},
        output=str(out_dir),
        dataset_fingerprint=data_fingerprint,
    ), out_dir)

    success(f"Wrote {len(images)} images to {out_dir}")
    info(f"  Class counts: {class_counts(images)}")
    info(f"  Fingerprint: {data_fingerprint}")
    info(f"\nNext step: Run 'python main.py train --data {out_dir}' to train the classifier")
    return out_dir
