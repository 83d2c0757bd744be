"""Mini-batch training with best-validation-loss checkpoint selection."""

from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from classifier.checkpoint import Checkpoint
from core import ops
from core.network import Network, forward, predict_batched
from core.sgd import SgdConfig, SgdState, sgd_step
from dataset.images import LabeledImage, fingerprint, stack
from dataset.splits import DatasetSplits
from utils.errors import ConfigError, DataError, NumericError, StateError
from utils.logger import debug


def _default_sgd() -> SgdConfig:
    return SgdConfig(learning_rate=0.05, momentum=0.9, decay_factor=0.5, decay_interval=20)


class TrainConfig(BaseModel):
    """Training hyperparameters."""

    epochs: int = Field(default=60, ge=1)
    batch_size: int = Field(default=32, ge=1)
    sgd: SgdConfig = Field(default_factory=_default_sgd)
    seed: int = 0


class EpochStats(BaseModel):
    epoch: int
    train_loss: float
    validation_loss: float
    learning_rate: float


def _arrays(images: Sequence[LabeledImage], num_classes: int, split: str) -> Tuple[np.ndarray, np.ndarray]:
    if not images:
        raise DataError(f"{split} split is empty")
    labels = np.array([item.label for item in images], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise DataError(f"{split} split has labels outside [0, {num_classes})")
    return stack(images)[:, None], labels


def cross_entropy(network: Network, x: np.ndarray, labels: np.ndarray, batch_size: int = 256) -> float:
    """Mean cross-entropy of the network's probabilities against labels."""
    probs = predict_batched(network, x, batch_size=batch_size).astype(np.float64)
    picked = probs[np.arange(labels.shape[0]), labels]
    return float(-np.log(np.maximum(picked, 1e-12)).mean())


def train(
    network: Network,
    splits: DatasetSplits,
    config: TrainConfig,
    on_epoch: Optional[Callable[[EpochStats], None]] = None
) -> Checkpoint:
    """Train the network and keep the weights with the lowest validation loss.

    Args:
        network: Unfrozen network, updated in place
        splits: Train and validation images are used; holdout is untouched
        config: Training hyperparameters
        on_epoch: Called with each epoch's statistics

    Returns:
        Checkpoint holding the best epoch's weights; the network is left
        with those weights loaded
    """
    if network.frozen:
        raise StateError("cannot train a frozen network")
    x_train, y_train = _arrays(splits.train, network.num_classes, "train")
    x_val, y_val = _arrays(splits.validation, network.num_classes, "validation")
    n = x_train.shape[0]
    if config.batch_size > n:
        raise ConfigError(f"batch size {config.batch_size} exceeds the {n} training images")

    rng = np.random.default_rng(config.seed)
    state = SgdState(config=config.sgd)
    best_loss = np.inf
    best_epoch = 0
    best_params = {k: v.copy() for k, v in network.parameters().items()}
    history = []

    for epoch in range(1, config.epochs + 1):
        lr = state.learning_rate
        order = rng.permutation(n)
        total = 0.0
        try:
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                _, record = forward(network, x_train[idx], record=True, track_parameters=True)
                loss = ops.softmax_cross_entropy(record.logits, y_train[idx])
                grads = record.tape.gradients(loss, np.ones((), dtype=loss.value.dtype))
                param_grads = {key: grads.wrt(var) for key, var in record.parameters.items()}
                updated, state = sgd_step(network.parameters(), param_grads, state)
                network.set_parameters(updated)
                total += float(loss.value) * idx.shape[0]
            val_loss = cross_entropy(network, x_val, y_val)
        except NumericError as e:
            raise NumericError(f"training diverged at epoch {epoch}: {e}") from e
        if not np.isfinite(val_loss):
            raise NumericError(f"training diverged at epoch {epoch}: validation loss is {val_loss}")
        state.advance_epoch()

        stats = EpochStats(epoch=epoch, train_loss=total / n, validation_loss=val_loss, learning_rate=lr)
        history.append(stats)
        debug(f"epoch {epoch}: train {stats.train_loss:.4f} val {val_loss:.4f} lr {lr:.4g}")
        if on_epoch is not None:
            on_epoch(stats)

        # Strict comparison keeps the earlier epoch on ties.
        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in network.parameters().items()}

    network.set_parameters(best_params)
    if splits.manifest is not None:
        data_fingerprint = splits.manifest.fingerprint
    else:
        data_fingerprint = fingerprint([*splits.train, *splits.validation, *splits.holdout])

    return Checkpoint(
        network=network,
        epoch=best_epoch,
        validation_loss=best_loss,
        config=config.model_dump(mode="json"),
        dataset_fingerprint=data_fingerprint,
        history=[h.model_dump() for h in history],
        split=splits.manifest.model_dump(mode="json") if splits.manifest is not None else None,
    )
