"""Persistent, unbounded, seeded 3D landscape engine.

A world is a pure function of its seed: a hashed latent lattice drives
a convolutional layout generator, blended windows stitch into an
infinite ground-plane feature field, a style-modulated MLP lifts the
field to a radiance function, and a volume renderer produces feature,
disparity, sky-mask, and projected-noise buffers that are refined,
composited against a skydome, and served over HTTP.
"""

from .config import (ConfigurationError, OutOfBoundsError, OutOfExtentPolicy,
                     RenderConfig)
from .pipeline import FramePipeline
from .render import Camera, RenderBuffers, render_frame, supersample_render
from .world import NeuralWorld, OracleWorld

__all__ = [
    "Camera",
    "ConfigurationError",
    "FramePipeline",
    "NeuralWorld",
    "OracleWorld",
    "OutOfBoundsError",
    "OutOfExtentPolicy",
    "RenderBuffers",
    "RenderConfig",
    "render_frame",
    "supersample_render",
]

__version__ = "0.1.0"
