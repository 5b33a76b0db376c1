"""Sinusoidal positional encodings for the chunked feature grid.

The 2D table splits the feature dimension in half: the first N/2 slots
encode the intra-chunk position c, the second the chunk index i, each with
sin/cos pairs at geometric frequencies 10000^(-4u/N).  Positions are
zero-based, so the (c=0, i=0) corner is all sin=0 / cos=1.

The 1D variant (ablation baseline) encodes only the intra-chunk position and
is therefore identical for every chunk.
"""

from functools import lru_cache

import numpy as np

from .errors import ShapeError
from .tensor import Tensor, default_dtype


@lru_cache(maxsize=32)
def _pe2d_array(N, C, I):
    if N % 4 != 0:
        raise ShapeError(f"2D encoding needs N divisible by 4, got N={N}")
    half = N // 2
    freq = 10000.0 ** (-4.0 * np.arange(half // 2, dtype=np.float64) / N)  # (N/4,)
    c_phase = np.arange(C, dtype=np.float64)[:, None] * freq  # (C, N/4)
    i_phase = np.arange(I, dtype=np.float64)[:, None] * freq  # (I, N/4)

    table = np.zeros((N, C, I), dtype=np.float64)
    table[0:half:2] = np.sin(c_phase).T[:, :, None]
    table[1:half:2] = np.cos(c_phase).T[:, :, None]
    table[half::2] = np.sin(i_phase).T[:, None, :]
    table[half + 1 :: 2] = np.cos(i_phase).T[:, None, :]
    return table


@lru_cache(maxsize=32)
def _pe1d_array(N, C):
    if N % 2 != 0:
        raise ShapeError(f"1D encoding needs even N, got N={N}")
    freq = 10000.0 ** (-2.0 * np.arange(N // 2, dtype=np.float64) / N)  # (N/2,)
    phase = np.arange(C, dtype=np.float64)[:, None] * freq  # (C, N/2)
    table = np.zeros((N, C), dtype=np.float64)
    table[0::2] = np.sin(phase).T
    table[1::2] = np.cos(phase).T
    return table


def pe2d(N, C, I):
    """Joint (intra-chunk, inter-chunk) encoding table, shape (N, C, I)."""
    return Tensor(_pe2d_array(N, C, I).astype(default_dtype()))


def pe2d_visual_row(N, C, I):
    """The pe2d slice at the chunk midpoint c = C/2, shape (N, I); added to the cue."""
    return Tensor(_pe2d_array(N, C, I)[:, C // 2, :].astype(default_dtype()))


def pe1d(N, C):
    """Intra-chunk-only encoding, shape (N, C); broadcast identically to every chunk."""
    return Tensor(_pe1d_array(N, C).astype(default_dtype()))
