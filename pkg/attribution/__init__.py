"""Pixel attribution methods over a frozen classifier."""

from .gradcam import grad_cam, grad_cam_pp
from .gradients import IgConfig, integrated_gradients, saliency
from .maps import METHODS, AttributionMap, load_map, load_map_dir, save_map
from .methods import MethodSettings, compute_map, random_attribution, resolve_methods
from .pcim import FitConfig, MixingState, PixelChannels, blend, extract_map, fit_mixing, isolate_pixels, reassemble
from .rise import RiseConfig, rise

__all__ = [
    "METHODS",
    "AttributionMap",
    "FitConfig",
    "IgConfig",
    "MethodSettings",
    "MixingState",
    "PixelChannels",
    "RiseConfig",
    "blend",
    "compute_map",
    "extract_map",
    "fit_mixing",
    "grad_cam",
    "grad_cam_pp",
    "integrated_gradients",
    "isolate_pixels",
    "load_map",
    "load_map_dir",
    "random_attribution",
    "reassemble",
    "resolve_methods",
    "rise",
    "saliency",
    "save_map",
]
