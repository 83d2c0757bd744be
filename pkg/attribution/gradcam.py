"""Class activation maps from the last convolutional feature maps."""

from typing import Tuple

import numpy as np
from skimage.transform import resize

from attribution.maps import AttributionMap
from core.network import Conv2D, Network, ReLU, ScoreTarget, as_batch, backward, forward
from utils.errors import ArchitectureError


def feature_layer(network: Network) -> str:
    """Name of the rectified output of the last convolution."""
    last = None
    for idx, layer in enumerate(network.layers):
        if isinstance(layer, Conv2D):
            last = idx
    if last is None:
        raise ArchitectureError("class activation maps need at least one convolutional layer")
    following = network.layers[last + 1] if last + 1 < len(network.layers) else None
    if isinstance(following, ReLU):
        return following.name
    return network.layers[last].name


def features_and_gradients(
    network: Network,
    image: np.ndarray,
    class_index: int,
    target: ScoreTarget = "logit"
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Feature maps A (K, h', w'), dscore/dA and the class score."""
    layer = feature_layer(network)
    batch = as_batch(image, network.input_shape).astype(network.dtype, copy=False)
    _, record = forward(network, batch, record=True)
    grads = backward(record, class_index, target)
    output = record.logits if target == "logit" else record.probabilities
    features = record.outputs[layer]
    return features.value[0], grads.wrt(features)[0], float(output.value[0, class_index])


def upsample(cam: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    """Bilinear resize to the input grid."""
    if cam.shape == tuple(shape):
        return cam
    return resize(cam, shape, order=1, mode="edge", anti_aliasing=False, preserve_range=True)


def cam_from_gradients(features: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """ReLU of the feature maps weighted by their spatially averaged gradients."""
    features = features.astype(np.float64)
    weights = gradients.astype(np.float64).mean(axis=(1, 2))
    return np.maximum(np.tensordot(weights, features, axes=1), 0)


def campp_from_gradients(features: np.ndarray, gradients: np.ndarray, score: float) -> np.ndarray:
    """Second-order weighted CAM via the exponential-score closed form.

    With S = exp(score), dS/dA = S * g and the higher derivatives reduce to
    powers of g:

        a_ij = g_ij^2 / (2 g_ij^2 + sum_ab A_ab * g_ij^3)
        w_k  = sum_ij a_ij * relu(S * g_ij)

    Locations with a zero denominator get weight 0.
    """
    features = features.astype(np.float64)
    g = gradients.astype(np.float64)
    g2 = g ** 2
    g3 = g2 * g
    denom = 2 * g2 + features.sum(axis=(1, 2), keepdims=True) * g3
    alpha = np.divide(g2, denom, out=np.zeros_like(g2), where=denom != 0)
    weights = (alpha * np.maximum(np.exp(score) * g, 0)).sum(axis=(1, 2))
    return np.maximum(np.tensordot(weights, features, axes=1), 0)


def grad_cam(
    network: Network,
    image: np.ndarray,
    class_index: int,
    target: ScoreTarget = "logit",
    image_id: str = ""
) -> AttributionMap:
    features, gradients, _ = features_and_gradients(network, image, class_index, target)
    cam = upsample(cam_from_gradients(features, gradients), network.input_shape)
    return AttributionMap(cam.astype(np.float32), "gradcam", image_id)


def grad_cam_pp(
    network: Network,
    image: np.ndarray,
    class_index: int,
    target: ScoreTarget = "logit",
    image_id: str = ""
) -> AttributionMap:
    features, gradients, score = features_and_gradients(network, image, class_index, target)
    cam = upsample(campp_from_gradients(features, gradients, score), network.input_shape)
    return AttributionMap(cam.astype(np.float32), "gradcampp", image_id)
