"""Command to train the MiniVGG classifier."""

from pathlib import Path
from typing import Optional

import yaml

from classifier import TrainConfig, build_minivgg, evaluate_classifier, save_checkpoint, train
from commands.common import load_dataset, output_dir
from core.sgd import SgdConfig
from dataset.splits import balanced_split
from utils.logger import create_progress, info, section, success, table
from utils.manifest import RunManifest, write_run_manifest

METRICS_FILE = "metrics.yaml"


def train_command(
    data: str,
    epochs: int = 60,
    batch_size: int = 32,
    lr: float = 0.05,
    momentum: float = 0.9,
    decay: float = 0.5,
    decay_interval: int = 20,
    seed: int = 0,
    out: Optional[str] = None
) -> Path:
    """Balance, split, train and checkpoint; report holdout metrics."""
    section("Training Classifier")

    images, num_classes = load_dataset(data)
    splits = balanced_split(images, seed, num_classes)
    info(f"Split sizes: train {len(splits.train)}, validation {len(splits.validation)}, holdout {len(splits.holdout)}")

    h, w = images[0].shape
    network = build_minivgg(h, w, num_classes, seed=seed)
    config = TrainConfig(
        epochs=epochs,
        batch_size=batch_size,
        sgd=SgdConfig(learning_rate=lr, momentum=momentum, decay_factor=decay, decay_interval=decay_interval),
        seed=seed,
    )

    with create_progress() as progress:
        task = progress.add_task("Training...", total=epochs)

        def on_epoch(stats):
            progress.update(
                task,
                advance=1,
                description=f"Epoch {stats.epoch}: train {stats.train_loss:.3f} / val {stats.validation_loss:.3f}",
            )

        checkpoint = train(network, splits, config, on_epoch=on_epoch)

    success(f"Best epoch {checkpoint.epoch} with validation loss {checkpoint.validation_loss:.4f}")

    out_dir = output_dir(out, "checkpoint")
    save_checkpoint(checkpoint, out_dir)

    metrics = evaluate_classifier(checkpoint.network, splits.holdout)
    with open(out_dir / METRICS_FILE, "w", encoding="utf-8") as f:
        yaml.safe_dump({"split": "holdout", **metrics.model_dump()}, f, sort_keys=False)

    table(
        "Holdout performance",
        ["Metric", "Value"],
        [[name, f"{getattr(metrics, name):.3f}"] for name in ("accuracy", "precision", "recall", "f1")],
    )

    write_run_manifest(RunManifest(
        command="train",
        flags={
            "epochs": epochs,
            "batch_size": batch_size,
            "lr": lr,
            "momentum": momentum,
            "decay": decay,
            "decay_interval": decay_interval,
        },
        seeds={"seed": seed},
        inputs={"data": str(data)},
        output=str(out_dir),
        checkpoint_checksum=checkpoint.network.checksum(),
        dataset_fingerprint=checkpoint.dataset_fingerprint,
    ), out_dir)

    success(f"Checkpoint saved to: {out_dir}")
    info(f"\nNext step: Run 'python main.py attribute --checkpoint {out_dir} --data {data}'")
    return out_dir
