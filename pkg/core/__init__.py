"""Dense numerics with reverse-mode differentiation."""

from .network import (
    ActivationRecord,
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    Network,
    ReLU,
    backward,
    forward,
    predict_batched,
    predict_proba,
)
from .sgd import SgdConfig, SgdState, sgd_step
from .tape import GradientSet, Tape, Variable

__all__ = [
    "ActivationRecord",
    "Conv2D",
    "Dense",
    "Flatten",
    "GradientSet",
    "MaxPool2D",
    "Network",
    "ReLU",
    "SgdConfig",
    "SgdState",
    "Tape",
    "Variable",
    "backward",
    "forward",
    "predict_batched",
    "predict_proba",
    "sgd_step",
]
