"""Checkpoint storage.

A checkpoint is a directory with two files:

    manifest.yaml   architecture, tensor table, training config, dataset
                    fingerprint, selected epoch, validation loss, history
    weights.bin     every weight tensor in declaration order, concatenated
                    as little-endian float32 with no header or padding
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import yaml

from core.network import LAYER_TYPES, Conv2D, Dense, Network
from utils.errors import FormatError
from utils.logger import warning

MANIFEST_FILE = "manifest.yaml"
WEIGHTS_FILE = "weights.bin"
FORMAT_NAME = "pcim-checkpoint"
FORMAT_VERSION = 1
WEIGHT_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    """A trained network snapshot and how it was obtained."""

    network: Network
    epoch: int
    validation_loss: float
    config: dict = field(default_factory=dict)
    dataset_fingerprint: str = ""
    history: List[dict] = field(default_factory=list)
    split: Optional[dict] = None


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> Path:
    """Write the checkpoint directory.

    Args:
        checkpoint: Checkpoint to store
        path: Target directory, created when missing

    Returns:
        Path of the written manifest
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    network = checkpoint.network

    tensors = []
    offset = 0
    with open(path / WEIGHTS_FILE, "wb") as f:
        for name, value in network.parameters().items():
            data = np.ascontiguousarray(value, dtype=WEIGHT_DTYPE)
            f.write(data.tobytes())
            tensors.append({"name": name, "shape": list(value.shape), "offset": offset})
            offset += data.nbytes

    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "architecture": network.spec(),
        "tensors": tensors,
        "weights_bytes": offset,
        "checksum": network.checksum(),
        "epoch": checkpoint.epoch,
        "validation_loss": float(checkpoint.validation_loss),
        "dataset_fingerprint": checkpoint.dataset_fingerprint,
        "config": checkpoint.config,
        "split": checkpoint.split,
        "history": checkpoint.history,
    }
    manifest_path = path / MANIFEST_FILE
    with open(manifest_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=False)
    return manifest_path


def _read_manifest(path: Path) -> dict:
    manifest_path = path / MANIFEST_FILE
    if not manifest_path.exists():
        raise FormatError(f"checkpoint manifest not found: {manifest_path}")
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = yaml.safe_load(f)
    except yaml.MarkedYAMLError as e:
        offset = e.problem_mark.index if e.problem_mark is not None else "unknown"
        raise FormatError(f"{manifest_path}: cannot parse manifest at byte offset {offset}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise FormatError(f"{manifest_path}: cannot parse manifest: {e}") from e

    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT_NAME:
        raise FormatError(f"{manifest_path}: not a checkpoint manifest")
    if manifest.get("version") != FORMAT_VERSION:
        raise FormatError(f"{manifest_path}: unsupported checkpoint version {manifest.get('version')}")
    for key in ("architecture", "tensors", "weights_bytes"):
        if key not in manifest:
            raise FormatError(f"{manifest_path}: missing field '{key}'")
    return manifest


def _read_tensors(path: Path, manifest: dict) -> Dict[str, np.ndarray]:
    weights_path = path / WEIGHTS_FILE
    if not weights_path.exists():
        raise FormatError(f"checkpoint weights not found: {weights_path}")
    blob = weights_path.read_bytes()
    expected = int(manifest["weights_bytes"])
    if len(blob) != expected:
        # Name the first tensor that does not fit in the blob.
        for entry in manifest["tensors"]:
            end = entry["offset"] + int(np.prod(entry["shape"])) * WEIGHT_DTYPE.itemsize
            if end > len(blob):
                raise FormatError(
                    f"{weights_path}: truncated at byte offset {len(blob)}; "
                    f"tensor '{entry['name']}' spans bytes {entry['offset']}..{end}"
                )
        raise FormatError(f"{weights_path}: {len(blob) - expected} unexpected bytes after offset {expected}")

    tensors: Dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        values = np.frombuffer(blob, dtype=WEIGHT_DTYPE, count=count, offset=entry["offset"])
        tensors[entry["name"]] = values.reshape(shape).astype(np.float32)
    return tensors


def _build_network(architecture: dict, tensors: Dict[str, np.ndarray]) -> Network:
    layers = []
    for spec in architecture["layers"]:
        kind = spec.get("type")
        if kind not in LAYER_TYPES:
            raise FormatError(f"unknown layer type '{kind}' in checkpoint")
        layer_cls = LAYER_TYPES[kind]
        name = spec["name"]
        if layer_cls in (Conv2D, Dense):
            try:
                layers.append(layer_cls(name=name, weight=tensors[f"{name}.weight"], bias=tensors[f"{name}.bias"]))
            except KeyError as e:
                raise FormatError(f"checkpoint has no tensor {e} for layer '{name}'") from e
        else:
            layers.append(layer_cls(name=name))
    return Network(
        layers,
        tuple(architecture["input_shape"]),
        int(architecture["num_classes"]),
        head=architecture.get("head", "softmax"),
    )


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint directory written by save_checkpoint.

    Raises:
        FormatError: When the manifest or the weight blob is corrupt or
            truncated; the message carries the byte offset when known
    """
    path = Path(path)
    manifest = _read_manifest(path)
    tensors = _read_tensors(path, manifest)
    network = _build_network(manifest["architecture"], tensors)

    checksum = manifest.get("checksum")
    if checksum and network.checksum() != checksum:
        raise FormatError(f"{path / WEIGHTS_FILE}: weights do not match the manifest checksum")

    return Checkpoint(
        network=network,
        epoch=int(manifest.get("epoch", 0)),
        validation_loss=float(manifest.get("validation_loss", float("nan"))),
        config=manifest.get("config") or {},
        dataset_fingerprint=manifest.get("dataset_fingerprint", ""),
        history=manifest.get("history") or [],
        split=manifest.get("split"),
    )


def verify_fingerprint(checkpoint: Checkpoint, dataset_fingerprint: str) -> bool:
    """Warn when a dataset differs from the one the checkpoint was trained on."""
    if checkpoint.dataset_fingerprint and checkpoint.dataset_fingerprint != dataset_fingerprint:
        warning(
            "Dataset fingerprint differs from the checkpoint's training data "
            f"({dataset_fingerprint[:12]} vs {checkpoint.dataset_fingerprint[:12]})"
        )
        return False
    return True
