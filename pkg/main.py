#!/usr/bin/env python3
"""PCIM toolkit CLI - train a classifier, attribute its decisions, score the maps."""

import sys

import click
from pydantic import ValidationError

from attribution import METHODS, FitConfig, IgConfig, MethodSettings, RiseConfig
from commands import attribute_command, compare_command, evaluate_command, gen_data_command, train_command
from utils.errors import PcimError
from utils.logger import error, panel

THREADS_HELP = "Worker threads; 0 uses PCIM_THREADS or the CPU count"


def run(command, **kwargs) -> None:
    """Run a command, mapping failures to exit codes."""
    try:
        command(**kwargs)
    except KeyboardInterrupt:
        error("\nOperation cancelled by user")
        sys.exit(1)
    except PcimError as e:
        error(f"Command failed: {e}")
        sys.exit(e.exit_code)
    except ValidationError as e:
        error(f"Invalid parameters: {e}")
        sys.exit(2)
    except OSError as e:
        error(f"Command failed: {e}")
        sys.exit(3)
    except Exception as e:
        error(f"Command failed: {e}")
        sys.exit(1)


@click.group()
def cli():
    """PCIM toolkit - pixel attribution maps for single-channel image classifiers."""
    pass


@cli.command("gen-data")
@click.option("--size", type=click.IntRange(min=16), default=32, show_default=True, help="Image height and width")
@click.option("--per-class", type=click.IntRange(min=1), default=400, show_default=True, help="Images per class")
@click.option("--classes", type=click.Choice(["2", "3"]), default="2", show_default=True, help="Number of classes")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=click.FloatRange(0, 0.2, max_open=True), default=0.05, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Dataset directory")
def gen_data(size, per_class, classes, seed, noise, out):
    """Generate a synthetic dataset with foreground masks."""
    run(gen_data_command, size=size, per_class=per_class, classes=int(classes), seed=seed, noise=noise, out=out)


@cli.command("train")
@click.option("--data", type=click.Path(), required=True, help="Dataset directory")
@click.option("--epochs", type=click.IntRange(min=1), default=60, show_default=True)
@click.option("--batch-size", type=click.IntRange(min=1), default=32, show_default=True)
@click.option("--lr", type=click.FloatRange(min=0, min_open=True), default=0.05, show_default=True)
@click.option("--momentum", type=click.FloatRange(0, 1, max_open=True), default=0.9, show_default=True)
@click.option("--decay", type=click.FloatRange(0, 1, min_open=True), default=0.5, show_default=True,
              help="Learning-rate factor applied every --decay-interval epochs")
@click.option("--decay-interval", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Checkpoint directory")
def train(data, epochs, batch_size, lr, momentum, decay, decay_interval, seed, out):
    """Train MiniVGG and keep the best-validation-loss checkpoint."""
    run(
        train_command,
        data=data,
        epochs=epochs,
        batch_size=batch_size,
        lr=lr,
        momentum=momentum,
        decay=decay,
        decay_interval=decay_interval,
        seed=seed,
        out=out,
    )


@cli.command("attribute")
@click.option("--checkpoint", type=click.Path(), required=True, help="Checkpoint directory")
@click.option("--data", type=click.Path(), required=True, help="Dataset directory")
@click.option("--method", "methods", type=click.Choice([*METHODS, "all"]), multiple=True, default=["all"],
              show_default=True, help="Attribution method; repeat for several")
@click.option("--split", type=click.Choice(["train", "validation", "holdout"]), default="holdout", show_default=True)
@click.option("--pcim-steps", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--pcim-lr", type=click.FloatRange(min=0, min_open=True), default=0.5, show_default=True)
@click.option("--pcim-momentum", type=click.FloatRange(0, 1, max_open=True), default=0.9, show_default=True)
@click.option("--pcim-init", type=click.Choice(["zeros", "ones"]), default="zeros", show_default=True)
@click.option("--pcim-loss", type=click.Choice(["probability", "logit"]), default="probability", show_default=True)
@click.option("--ig-steps", type=click.IntRange(min=1), default=128, show_default=True)
@click.option("--rise-masks", type=click.IntRange(min=1), default=4000, show_default=True)
@click.option("--rise-grid", type=click.IntRange(min=1), default=7, show_default=True)
@click.option("--rise-keep", type=click.FloatRange(0, 1, min_open=True), default=0.5, show_default=True)
@click.option("--cam-target", type=click.Choice(["logit", "probability"]), default="logit", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for RISE masks and the random control")
@click.option("--limit", type=click.IntRange(min=1), default=None, help="Only the first N images of the split")
@click.option("--threads", type=click.IntRange(min=0), default=0, help=THREADS_HELP)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Map directory")
def attribute(checkpoint, data, methods, split, pcim_steps, pcim_lr, pcim_momentum, pcim_init, pcim_loss,
              ig_steps, rise_masks, rise_grid, rise_keep, cam_target, seed, limit, threads, out):
    """Compute attribution maps for one dataset split."""
    settings = MethodSettings(
        fit=FitConfig(steps=pcim_steps, learning_rate=pcim_lr, momentum=pcim_momentum, init=pcim_init, loss=pcim_loss),
        ig=IgConfig(steps=ig_steps),
        rise=RiseConfig(mask_count=rise_masks, grid_size=rise_grid, keep_probability=rise_keep, seed=seed),
        cam_target=cam_target,
        seed=seed,
    )
    run(
        attribute_command,
        checkpoint=checkpoint,
        data=data,
        methods=methods,
        split=split,
        settings=settings,
        limit=limit,
        threads=threads or None,
        out=out,
    )


@cli.command("evaluate")
@click.option("--checkpoint", type=click.Path(), required=True, help="Checkpoint directory")
@click.option("--data", type=click.Path(), required=True, help="Dataset directory")
@click.option("--maps", type=click.Path(), required=True, help="Map directory")
@click.option("--step-fraction", type=click.FloatRange(0, 0.5, min_open=True), default=0.02, show_default=True)
@click.option("--localization/--no-localization", default=False, show_default=True,
              help="Also score mass and rank accuracy against the masks")
@click.option("--threads", type=click.IntRange(min=0), default=0, help=THREADS_HELP)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Report directory")
def evaluate(checkpoint, data, maps, step_fraction, localization, threads, out):
    """Score maps with deletion / insertion curves and localization accuracy."""
    run(
        evaluate_command,
        checkpoint=checkpoint,
        data=data,
        maps=maps,
        step_fraction=step_fraction,
        localization=localization,
        threads=threads or None,
        out=out,
    )


@cli.command("compare")
@click.option("--maps", type=click.Path(), required=True, help="Map directory")
@click.option("--threads", type=click.IntRange(min=0), default=0, help=THREADS_HELP)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")
def compare(maps, threads, out):
    """Median-SSIM matrix between methods and its average-linkage clustering."""
    run(compare_command, maps=maps, threads=threads or None, out=out)


def main():
    """Main entry point."""
    if len(sys.argv) == 1:
        panel(
            "PCIM Toolkit\n\n"
            "Commands:\n"
            "  python main.py gen-data   - Generate a synthetic dataset\n"
            "  python main.py train      - Train the MiniVGG classifier\n"
            "  python main.py attribute  - Compute attribution maps\n"
            "  python main.py evaluate   - Score maps (deletion / insertion / localization)\n"
            "  python main.py compare    - Compare methods by SSIM\n\n"
            "Run 'python main.py --help' for more information.",
            title="Welcome",
            style="cyan"
        )
        sys.exit(0)

    cli()


if __name__ == "__main__":
    main()
