"""Command modules for the pixel attribution CLI."""

from .attribute import attribute_command
from .compare import compare_command
from .evaluate import evaluate_command
from .gen_data import gen_data_command
from .train import train_command

__all__ = ["attribute_command", "compare_command", "evaluate_command", "gen_data_command", "train_command"]
