"""Stochastic gradient descent with momentum and step learning-rate decay."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, Field

from utils.errors import DimensionError


class SgdConfig(BaseModel):
    """Optimizer hyperparameters."""

    learning_rate: float = Field(default=0.05, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    decay_factor: float = Field(default=1.0, gt=0, le=1)
    decay_interval: int = Field(default=1, gt=0)


@dataclass
class SgdState:
    """Optimizer state: hyperparameters, per-parameter velocity and epoch."""

    config: SgdConfig
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)
    epoch: int = 0

    @property
    def learning_rate(self) -> float:
        """Effective learning rate after the decays completed so far."""
        intervals = self.epoch // self.config.decay_interval
        return self.config.learning_rate * self.config.decay_factor ** intervals

    def advance_epoch(self) -> None:
        self.epoch += 1


def sgd_step(
    parameters: Dict[str, np.ndarray],
    gradients: Dict[str, np.ndarray],
    state: SgdState
) -> Tuple[Dict[str, np.ndarray], SgdState]:
    """Apply one momentum step.

    velocity <- momentum * velocity - lr * gradient
    parameter <- parameter + velocity

    Args:
        parameters: Current parameter tensors by name
        gradients: Gradients for the same names
        state: Optimizer state, updated in place

    Returns:
        New parameter tensors and the updated state
    """
    lr = state.learning_rate
    momentum = state.config.momentum
    updated: Dict[str, np.ndarray] = {}
    for key, param in parameters.items():
        grad = gradients.get(key)
        if grad is None:
            updated[key] = param
            continue
        if grad.shape != param.shape:
            raise DimensionError(f"{key}: gradient shape {grad.shape} does not match parameter {param.shape}")
        velocity = state.velocity.get(key)
        if velocity is None:
            velocity = np.zeros_like(param)
        elif velocity.shape != param.shape:
            raise DimensionError(f"{key}: velocity shape {velocity.shape} does not match parameter {param.shape}")
        velocity = (momentum * velocity - lr * grad).astype(param.dtype, copy=False)
        state.velocity[key] = velocity
        updated[key] = (param + velocity).astype(param.dtype, copy=False)
    return updated, state
