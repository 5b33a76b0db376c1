"""Cue-conditioned target speaker extraction at desk scale.

Time-domain mask-based extraction: a learnable conv front-end, 50%-overlap
chunking that aligns the audio grid to a coarse visual-cue stream, dual-scale
self-attention plus cross-modal attention fusion, and 2D sinusoidal positions,
all on a from-scratch autodiff tensor core.
"""

from .model import ModelConfig  # noqa: F401

__version__ = "0.1.0"
