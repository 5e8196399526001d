"""Compressed-sensing photoacoustic tomography reconstruction toolkit."""

from ._cspat import (
    ExperimentConfig,
    ImageGrid,
    measure,
    metrics,
    parse_config,
    phantom,
    preset_config,
    reconstruct,
    simulate,
)

__all__ = [
    "ExperimentConfig",
    "ImageGrid",
    "measure",
    "metrics",
    "parse_config",
    "phantom",
    "preset_config",
    "reconstruct",
    "simulate",
]
