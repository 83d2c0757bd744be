"""Differentiable primitives.

Each op accepts ``Variable`` objects or plain arrays (treated as
constants), computes its output with numpy and, when any input is taped,
records a backward closure on that tape. Ops preserve the input dtype so
that the same code runs at 32-bit for the network and at 64-bit for
finite-difference references.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.tape import Tape, Variable
from utils.errors import DimensionError, NumericError, StateError

ArrayLike = Union[Variable, np.ndarray]


def _as_var(x: ArrayLike) -> Variable:
    return x if isinstance(x, Variable) else Variable(value=np.asarray(x))


def _tape_of(*vars: Variable) -> Optional[Tape]:
    tape = None
    for var in vars:
        if var.tape is None:
            continue
        if tape is not None and var.tape is not tape:
            raise StateError("inputs are recorded on different tapes")
        tape = var.tape
    return tape


def _checked(value: np.ndarray, layer: str) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite values in layer '{layer}'")
    return value


def _emit(op: str, layer: str, inputs: Sequence[Variable], value: np.ndarray, backward) -> Variable:
    value = _checked(value, layer)
    tape = _tape_of(*inputs)
    if tape is None:
        return Variable(value=value, name=layer)
    return tape.record(op, layer, inputs, value, backward)


def _needs(var: Variable) -> bool:
    return var.tape is not None


def add(a: ArrayLike, b: ArrayLike, layer: str = "add") -> Variable:
    """Elementwise sum of equally shaped tensors."""
    a, b = _as_var(a), _as_var(b)
    if a.shape != b.shape:
        raise DimensionError(f"{layer}: shapes {a.shape} and {b.shape} differ")

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (g if _needs(a) else None, g if _needs(b) else None)

    return _emit("add", layer, (a, b), a.value + b.value, backward)


def multiply(a: ArrayLike, b: ArrayLike, layer: str = "multiply") -> Variable:
    """Elementwise product of equally shaped tensors."""
    a, b = _as_var(a), _as_var(b)
    if a.shape != b.shape:
        raise DimensionError(f"{layer}: shapes {a.shape} and {b.shape} differ")

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (g * b.value if _needs(a) else None, g * a.value if _needs(b) else None)

    return _emit("multiply", layer, (a, b), a.value * b.value, backward)


def reshape(x: ArrayLike, shape: Tuple[int, ...], layer: str = "reshape") -> Variable:
    """Reshape without copying data order."""
    x = _as_var(x)
    try:
        out = x.value.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"{layer}: cannot reshape {x.shape} to {shape}") from e

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (g.reshape(x.shape),)

    return _emit("reshape", layer, (x,), out, backward)


def conv2d(x: ArrayLike, weight: ArrayLike, bias: ArrayLike, layer: str = "conv") -> Variable:
    """Stride-1 convolution with zero "same" padding.

    Args:
        x: Input of shape (N, C, H, W)
        weight: Kernels of shape (F, C, k, k), k odd
        bias: Bias of shape (F,)
        layer: Layer identifier used on the tape and in errors

    Returns:
        Output of shape (N, F, H, W)
    """
    x, weight, bias = _as_var(x), _as_var(weight), _as_var(bias)
    if x.value.ndim != 4 or weight.value.ndim != 4:
        raise DimensionError(f"{layer}: expected 4-d input and kernels, got {x.shape} and {weight.shape}")
    filters, channels, k, k2 = weight.shape
    if k != k2 or k % 2 == 0:
        raise DimensionError(f"{layer}: kernels must be square with odd size, got {k}x{k2}")
    if x.shape[1] != channels:
        raise DimensionError(f"{layer}: input has {x.shape[1]} channels, kernels expect {channels}")
    if bias.shape != (filters,):
        raise DimensionError(f"{layer}: bias shape {bias.shape} does not match {filters} filters")

    pad = k // 2
    padded = np.pad(x.value, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    # (N, C, H, W, k, k)
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))
    out = np.tensordot(windows, weight.value, axes=([1, 4, 5], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2) + bias.value[None, :, None, None]

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        dx = dw = db = None
        if _needs(x):
            g_padded = np.pad(g, ((0, 0), (0, 0), (k - 1 - pad,) * 2, (k - 1 - pad,) * 2))
            g_windows = sliding_window_view(g_padded, (k, k), axis=(2, 3))
            flipped = weight.value[:, :, ::-1, ::-1]
            dx = np.tensordot(g_windows, flipped, axes=([1, 4, 5], [0, 2, 3])).transpose(0, 3, 1, 2)
        if _needs(weight):
            dw = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        if _needs(bias):
            db = g.sum(axis=(0, 2, 3))
        return dx, dw, db

    return _emit("conv2d", layer, (x, weight, bias), np.ascontiguousarray(out), backward)


def relu(x: ArrayLike, layer: str = "relu") -> Variable:
    """Rectified linear unit."""
    x = _as_var(x)
    active = x.value > 0

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (g * active,)

    return _emit("relu", layer, (x,), np.where(active, x.value, 0).astype(x.value.dtype), backward)


def max_pool2d(x: ArrayLike, layer: str = "maxpool") -> Variable:
    """2x2 max pooling with stride 2; ties go to the first row-major position."""
    x = _as_var(x)
    if x.value.ndim != 4:
        raise DimensionError(f"{layer}: expected 4-d input, got {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"{layer}: spatial size {h}x{w} is not divisible by 2")

    blocks = x.value.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    winner = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        routed = np.zeros_like(blocks)
        np.put_along_axis(routed, winner[..., None], g[..., None], axis=-1)
        dx = routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        return (dx,)

    return _emit("maxpool", layer, (x,), out, backward)


def flatten(x: ArrayLike, layer: str = "flatten") -> Variable:
    """Collapse all but the batch axis."""
    x = _as_var(x)
    return reshape(x, (x.shape[0], -1), layer=layer)


def dense(x: ArrayLike, weight: ArrayLike, bias: ArrayLike, layer: str = "dense") -> Variable:
    """Fully connected layer: x (N, D) @ weight (D, M) + bias (M,)."""
    x, weight, bias = _as_var(x), _as_var(weight), _as_var(bias)
    if x.value.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise DimensionError(f"{layer}: input {x.shape} does not match weights {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"{layer}: bias shape {bias.shape} does not match {weight.shape[1]} units")

    out = x.value @ weight.value + bias.value

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (
            g @ weight.value.T if _needs(x) else None,
            x.value.T @ g if _needs(weight) else None,
            g.sum(axis=0) if _needs(bias) else None,
        )

    return _emit("dense", layer, (x, weight, bias), out, backward)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax(x: ArrayLike, layer: str = "softmax") -> Variable:
    """Row-wise softmax over class logits of shape (N, classes)."""
    x = _as_var(x)
    probs = _softmax(x.value)

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (probs * (g - (g * probs).sum(axis=1, keepdims=True)),)

    return _emit("softmax", layer, (x,), probs, backward)


def softmax_cross_entropy(logits: ArrayLike, labels: np.ndarray, layer: str = "loss") -> Variable:
    """Mean cross-entropy of softmax(logits) against integer labels.

    Returns:
        A scalar variable of shape ()
    """
    logits = _as_var(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, classes = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"{layer}: {labels.shape[0] if labels.ndim else 0} labels for {n} rows")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise DimensionError(f"{layer}: labels must lie in [0, {classes})")

    shifted = logits.value - logits.value.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = np.asarray((log_norm - shifted[rows, labels]).mean(), dtype=logits.value.dtype)
    probs = np.exp(shifted - log_norm[:, None])

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        grad = probs.copy()
        grad[rows, labels] -= 1
        return (grad * (g / n),)

    return _emit("softmax_cross_entropy", layer, (logits,), loss, backward)


def negative_class_score(scores: ArrayLike, labels: np.ndarray, layer: str = "loss") -> Variable:
    """Mean of -scores[n, labels[n]]; minimising it raises the class score."""
    scores = _as_var(scores)
    labels = np.asarray(labels, dtype=np.int64)
    n = scores.shape[0]
    rows = np.arange(n)
    loss = np.asarray(-scores.value[rows, labels].mean(), dtype=scores.value.dtype)

    def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        grad = np.zeros_like(scores.value)
        grad[rows, labels] = -g / n
        return (grad,)

    return _emit("negative_class_score", layer, (scores,), loss, backward)
