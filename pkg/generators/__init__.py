"""Data generators for the pixel attribution toolkit."""

from .synthetic import CLASS_NAMES, SynthConfig, SyntheticGenerator, generate_synthetic

__all__ = ["CLASS_NAMES", "SynthConfig", "SyntheticGenerator", "generate_synthetic"]
