"""Finite-difference validation of analytic gradients.

Analytic gradients come from the tape in the tensors' own precision. The
central-difference reference is evaluated on 64-bit copies so that the
comparison measures the backward pass, not float32 cancellation.
"""

from typing import Callable, Sequence

import numpy as np

from core.network import Network, ScoreTarget, as_batch, backward, forward
from core.tape import Tape, Variable
from utils.errors import ConfigError, DimensionError


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """Worst |a - n| / max(|a|, |n|, floor * scale) over paired samples.

    scale is the largest reference magnitude among the samples, so entries
    that are tiny relative to the rest are judged on absolute error. Two
    all-zero gradients have error 0.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(numeric).max(initial=0.0), np.abs(analytic).max(initial=0.0))
    if scale == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor * scale)
    return float((np.abs(analytic - numeric) / denom).max())


def _check_epsilon(epsilon: float) -> None:
    if not 1e-4 <= epsilon <= 1e-2:
        raise ConfigError(f"epsilon {epsilon} outside [1e-4, 1e-2]")


def finite_difference_check(
    network: Network,
    image: np.ndarray,
    class_index: int,
    epsilon: float = 1e-3,
    sample_count: int = 64,
    target: ScoreTarget = "logit",
    seed: int = 0
) -> float:
    """Compare the input gradient of a class score to central differences.

    Args:
        network: Network under test
        image: Single (h, w) input
        class_index: Class whose score is differentiated
        epsilon: Perturbation size
        sample_count: Number of randomly sampled pixels
        target: "logit" or "probability"
        seed: Seed for the pixel sample

    Returns:
        Worst relative error over the sampled pixels
    """
    _check_epsilon(epsilon)
    batch = as_batch(image, network.input_shape)
    pixels = int(np.prod(network.input_shape))
    if not 1 <= sample_count <= pixels:
        raise ConfigError(f"sample_count {sample_count} must lie in [1, {pixels}]")

    _, record = forward(network, batch, record=True)
    analytic = backward(record, class_index, target).wrt(record.input).reshape(-1)

    reference = network.astype(np.float64)
    base = batch.astype(np.float64).reshape(-1)

    def score(flat: np.ndarray) -> float:
        probs, rec = forward(reference, flat.reshape(batch.shape), record=True)
        output = rec.logits if target == "logit" else rec.probabilities
        return float(output.value[0, class_index])

    rng = np.random.default_rng(seed)
    coords = rng.choice(pixels, size=sample_count, replace=False)
    numeric = np.empty(sample_count)
    for slot, idx in enumerate(coords):
        plus, minus = base.copy(), base.copy()
        plus[idx] += epsilon
        minus[idx] -= epsilon
        numeric[slot] = (score(plus) - score(minus)) / (2 * epsilon)
    return relative_error(analytic[coords], numeric)


def check_op(
    op: Callable[..., Variable],
    inputs: Sequence[np.ndarray],
    epsilon: float = 1e-3,
    sample_count: int = 64,
    seed: int = 0
) -> float:
    """Finite-difference check of a primitive against a random projection.

    The scalar objective is sum(op(*inputs) * R) for a fixed random R;
    sample_count coordinates are drawn across all inputs.

    Args:
        op: Primitive taking the inputs positionally
        inputs: Input arrays (float32)
        epsilon: Perturbation size
        sample_count: Number of probes
        seed: Seed for the projection and the probes

    Returns:
        Worst relative error over the probes
    """
    _check_epsilon(epsilon)
    rng = np.random.default_rng(seed)

    tape = Tape()
    watched = [tape.watch(np.asarray(x), name=f"input{i}") for i, x in enumerate(inputs)]
    out = op(*watched)
    projection = np.asarray(rng.standard_normal(out.shape), dtype=out.value.dtype)
    grads = tape.gradients(out, projection)
    analytic = [grads.wrt(v) for v in watched]

    wide = [np.asarray(x, dtype=np.float64) for x in inputs]
    projection64 = projection.astype(np.float64)

    def objective(arrays: Sequence[np.ndarray]) -> float:
        return float((op(*arrays).value * projection64).sum())

    sizes = np.array([x.size for x in wide])
    if sizes.sum() == 0:
        raise DimensionError("op has no input elements")
    probes = rng.choice(int(sizes.sum()), size=min(sample_count, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    numeric, expected = [], []
    for probe in probes:
        which = int(np.searchsorted(offsets, probe, side="right") - 1)
        flat_idx = int(probe - offsets[which])
        plus = [x.copy() for x in wide]
        minus = [x.copy() for x in wide]
        plus[which].reshape(-1)[flat_idx] += epsilon
        minus[which].reshape(-1)[flat_idx] -= epsilon
        numeric.append((objective(plus) - objective(minus)) / (2 * epsilon))
        expected.append(analytic[which].reshape(-1)[flat_idx])
    return relative_error(np.array(expected), np.array(numeric))
