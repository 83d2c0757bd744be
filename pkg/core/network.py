"""Sequential networks, forward recording and class-score backward."""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np

from core import ops
from core.tape import GradientSet, Tape, Variable
from utils.errors import DimensionError, StateError

Head = Literal["softmax", "identity"]
ScoreTarget = Literal["logit", "probability"]

DTYPE = np.float32


@dataclass
class Layer:
    """Base class for network layers."""

    name: str
    kind = "layer"

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}

    def output_shape(self, shape: Tuple[int, ...]) -> Tuple[int, ...]:
        return shape

    def spec(self) -> dict:
        return {"name": self.name, "type": self.kind}

    def __call__(self, x: Variable, params: Dict[str, Union[Variable, np.ndarray]]) -> Variable:
        raise NotImplementedError


@dataclass
class Conv2D(Layer):
    weight: np.ndarray = None
    bias: np.ndarray = None
    kind = "conv2d"

    def parameters(self) -> Dict[str, np.ndarray]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def output_shape(self, shape):
        c, h, w = shape
        if c != self.weight.shape[1]:
            raise DimensionError(f"{self.name}: expects {self.weight.shape[1]} channels, gets {c}")
        return (self.weight.shape[0], h, w)

    def spec(self) -> dict:
        return {**super().spec(), "filters": int(self.weight.shape[0]), "kernel": int(self.weight.shape[2])}

    def __call__(self, x, params):
        return ops.conv2d(x, params[f"{self.name}.weight"], params[f"{self.name}.bias"], layer=self.name)


@dataclass
class ReLU(Layer):
    kind = "relu"

    def __call__(self, x, params):
        return ops.relu(x, layer=self.name)


@dataclass
class MaxPool2D(Layer):
    kind = "maxpool"

    def output_shape(self, shape):
        c, h, w = shape
        if h % 2 or w % 2:
            raise DimensionError(f"{self.name}: cannot pool {h}x{w}")
        return (c, h // 2, w // 2)

    def __call__(self, x, params):
        return ops.max_pool2d(x, layer=self.name)


@dataclass
class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def __call__(self, x, params):
        return ops.flatten(x, layer=self.name)


@dataclass
class Dense(Layer):
    weight: np.ndarray = None
    bias: np.ndarray = None
    kind = "dense"

    def parameters(self) -> Dict[str, np.ndarray]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def output_shape(self, shape):
        if shape != (self.weight.shape[0],):
            raise DimensionError(f"{self.name}: expects {self.weight.shape[0]} features, gets {shape}")
        return (self.weight.shape[1],)

    def spec(self) -> dict:
        return {**super().spec(), "units": int(self.weight.shape[1])}

    def __call__(self, x, params):
        return ops.dense(x, params[f"{self.name}.weight"], params[f"{self.name}.bias"], layer=self.name)


LAYER_TYPES = {cls.kind: cls for cls in (Conv2D, ReLU, MaxPool2D, Flatten, Dense)}


class Network:
    """Layered single-channel image classifier."""

    def __init__(self, layers: List[Layer], input_shape: Tuple[int, int], num_classes: int, head: Head = "softmax"):
        """Initialize the network and validate the layer chain.

        Args:
            layers: Layers applied in order
            input_shape: (h, w) of the single-channel input
            num_classes: Width of the final layer
            head: "softmax" turns logits into probabilities; "identity"
                treats the last layer's output as probabilities already
        """
        self.layers = layers
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes
        self.head = head
        self.frozen = False

        shape: Tuple[int, ...] = (1, *self.input_shape)
        for layer in layers:
            shape = layer.output_shape(shape)
        if shape != (num_classes,):
            raise DimensionError(f"layer chain ends in shape {shape}, expected ({num_classes},)")

    def freeze(self) -> "Network":
        """Mark the weights read-only."""
        self.frozen = True
        return self

    def unfreeze(self) -> "Network":
        self.frozen = False
        return self

    def parameters(self) -> Dict[str, np.ndarray]:
        """All weight tensors in declaration order."""
        params: Dict[str, np.ndarray] = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params

    def set_parameters(self, params: Dict[str, np.ndarray]) -> None:
        """Replace weight tensors; refused while frozen."""
        if self.frozen:
            raise StateError("network is frozen; weights cannot be modified")
        current = self.parameters()
        for key, value in params.items():
            if key not in current:
                raise KeyError(key)
            if value.shape != current[key].shape:
                raise DimensionError(f"{key}: shape {value.shape} does not match {current[key].shape}")
        for layer in self.layers:
            for key in layer.parameters():
                if key in params:
                    attr = key.rsplit(".", 1)[1]
                    setattr(layer, attr, np.array(params[key], dtype=current[key].dtype))

    def checksum(self) -> str:
        """SHA-256 over all weight bytes in declaration order."""
        digest = hashlib.sha256()
        for key, value in self.parameters().items():
            digest.update(key.encode())
            digest.update(np.ascontiguousarray(value).tobytes())
        return digest.hexdigest()

    def spec(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "head": self.head,
            "layers": [layer.spec() for layer in self.layers],
        }

    def conv_layers(self) -> List[str]:
        return [layer.name for layer in self.layers if isinstance(layer, Conv2D)]

    def astype(self, dtype) -> "Network":
        """Copy of the network with weights cast to dtype."""
        layers = []
        for layer in self.layers:
            if isinstance(layer, (Conv2D, Dense)):
                layers.append(type(layer)(name=layer.name, weight=layer.weight.astype(dtype), bias=layer.bias.astype(dtype)))
            else:
                layers.append(type(layer)(name=layer.name))
        copy = Network(layers, self.input_shape, self.num_classes, self.head)
        copy.frozen = self.frozen
        return copy

    @property
    def dtype(self):
        params = self.parameters()
        return next(iter(params.values())).dtype if params else DTYPE


@dataclass
class ActivationRecord:
    """Per-layer outputs captured during a recorded forward pass."""

    tape: Tape
    input: Variable
    outputs: Dict[str, Variable] = field(default_factory=dict)
    parameters: Dict[str, Variable] = field(default_factory=dict)
    logits: Optional[Variable] = None
    probabilities: Optional[Variable] = None

    def activation(self, layer: str) -> np.ndarray:
        return self.outputs[layer].value


def as_batch(x: np.ndarray, input_shape: Tuple[int, int]) -> np.ndarray:
    """Bring (h, w), (N, h, w) or (N, 1, h, w) input into NCHW layout."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[:, None]
    if x.ndim != 4 or x.shape[1] != 1 or tuple(x.shape[2:]) != tuple(input_shape):
        raise DimensionError(f"input shape {x.shape} does not match network input {tuple(input_shape)}")
    return x


def forward(
    network: Network,
    x: Union[np.ndarray, Variable],
    record: bool = False,
    track_parameters: bool = False
) -> Tuple[np.ndarray, Optional[ActivationRecord]]:
    """Run the network on a single image or a batch.

    Args:
        network: Network to evaluate
        x: Input array, or a taped variable already in NCHW layout
        record: Record every primitive so gradients can be taken
        track_parameters: Also register the weights on the tape

    Returns:
        Class probabilities of shape (N, num_classes) and, when recording,
        the activation record
    """
    if track_parameters and network.frozen:
        raise StateError("cannot track parameter gradients of a frozen network")

    tape: Optional[Tape] = None
    if isinstance(x, Variable):
        if x.value.ndim != 4 or tuple(x.shape[1:]) != (1, *network.input_shape):
            raise DimensionError(f"input shape {x.shape} does not match network input {network.input_shape}")
        inp = x
        tape = x.tape
        if record and tape is None:
            tape = Tape()
            inp = tape.watch(x.value, name="input")
    else:
        batch = as_batch(x, network.input_shape).astype(network.dtype, copy=False)
        if record:
            tape = Tape()
            inp = tape.watch(batch, name="input")
        else:
            inp = Variable(value=batch, name="input")

    params: Dict[str, Union[Variable, np.ndarray]] = dict(network.parameters())
    watched: Dict[str, Variable] = {}
    if record and track_parameters:
        for key, value in network.parameters().items():
            watched[key] = tape.watch(value, name=key)
        params.update(watched)

    outputs: Dict[str, Variable] = {}
    h = inp
    for layer in network.layers:
        h = layer(h, params)
        outputs[layer.name] = h

    logits = h
    probabilities = ops.softmax(logits, layer="softmax") if network.head == "softmax" else logits

    if not record:
        return probabilities.value, None
    activations = ActivationRecord(
        tape=tape,
        input=inp,
        outputs=outputs,
        parameters=watched,
        logits=logits,
        probabilities=probabilities,
    )
    return probabilities.value, activations


def backward(
    record: Optional[ActivationRecord],
    class_index: int,
    target: ScoreTarget = "logit"
) -> GradientSet:
    """Gradients of a class score with respect to every recorded tensor.

    The score is summed over the batch, so each row of a batched input
    receives its own per-sample gradient.

    Args:
        record: Activation record from a recorded forward pass
        class_index: Class whose score is differentiated
        target: "logit" for the pre-softmax score, "probability" for the
            post-softmax probability

    Returns:
        Gradient set over the record's tape
    """
    if record is None or len(record.tape) == 0:
        raise StateError("no recorded computation; call forward with record=True")
    output = record.logits if target == "logit" else record.probabilities
    num_classes = output.shape[1]
    if not 0 <= class_index < num_classes:
        raise DimensionError(f"class index {class_index} outside [0, {num_classes})")
    seed = np.zeros_like(output.value)
    seed[:, class_index] = 1
    return record.tape.gradients(output, seed)


def predict_proba(network: Network, image: np.ndarray) -> np.ndarray:
    """Class probabilities for one (h, w) image."""
    probabilities, _ = forward(network, image)
    return probabilities[0]


def predict_batched(network: Network, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Class probabilities for a stack of images, evaluated in chunks."""
    images = as_batch(images, network.input_shape)
    chunks = [forward(network, images[i:i + batch_size])[0] for i in range(0, images.shape[0], batch_size)]
    if not chunks:
        return np.zeros((0, network.num_classes), dtype=network.dtype)
    return np.concatenate(chunks)
