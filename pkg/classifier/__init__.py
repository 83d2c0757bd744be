"""MiniVGG classifier: architecture, training, checkpoints and metrics."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint, verify_fingerprint
from .metrics import ClassifierMetrics, evaluate_classifier
from .minivgg import build_minivgg
from .trainer import EpochStats, TrainConfig, train

__all__ = [
    "Checkpoint",
    "ClassifierMetrics",
    "EpochStats",
    "TrainConfig",
    "build_minivgg",
    "evaluate_classifier",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "verify_fingerprint",
]
