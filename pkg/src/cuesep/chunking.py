"""50%-overlap chunking of 2D features, overlap-add reconstruction, and the
audio-to-cue alignment arithmetic.

Padding policy (normative for this artifact, since the chunk count must land
on the visual frame count): pad C/2 zero columns at the front, at least C/2
at the back, then fill the back until (K' - C) divides by C/2.  With hop
C/2 every padded column is covered by one or two chunks, and a 4 s / 16 kHz
clip at L=16, C=160 yields I = 101 chunks against 100 video frames.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from . import tensor as T
from .errors import AlignmentError, ShapeError
from .tensor import Tensor


@dataclass
class ChunkGeometry:
    """Shape bookkeeping that makes chunking exactly invertible."""

    C: int
    source_K: int
    pad_front: int
    pad_back: int

    @property
    def padded_K(self):
        return self.source_K + self.pad_front + self.pad_back

    @property
    def I(self):
        return (self.padded_K - self.C) // (self.C // 2) + 1


@dataclass
class ChunkedFeature:
    """(N, C, I) chunked view of an (N, K) feature plus its geometry."""

    values: Tensor
    geometry: ChunkGeometry

    @property
    def I(self):
        return self.geometry.I


def chunk_geometry(K, C):
    if C < 2 or C % 2 != 0:
        raise ShapeError(f"chunk length must be even and >= 2, got {C}")
    if K < 1:
        raise ShapeError(f"need at least one feature column, got K={K}")
    hop = C // 2
    pad_front = hop
    min_len = K + C  # front hop plus at least hop at the back
    padded = min_len + (-(min_len - C) % hop)
    return ChunkGeometry(C=C, source_K=K, pad_front=pad_front, pad_back=padded - K - pad_front)


def chunk(h, C):
    """Split feature columns (N, K) into 50%-overlapped chunks -> (N, C, I)."""
    if h.ndim != 2:
        raise ShapeError(f"chunk expects (N, K), got {h.shape}")
    geo = chunk_geometry(h.shape[1], C)
    N, K = h.shape
    padded = np.zeros((N, geo.padded_K), dtype=h.data.dtype)
    padded[:, geo.pad_front : geo.pad_front + K] = h.data
    data = kernels.chunk_gather(padded, C)
    out = Tensor(data, requires_grad=h.requires_grad, dtype=data.dtype)

    def backward(g):
        scattered = kernels.chunk_scatter(np.ascontiguousarray(g), geo.padded_K)
        return (np.ascontiguousarray(scattered[:, geo.pad_front : geo.pad_front + K]),)

    T.push_node(out, (h,), backward)
    return ChunkedFeature(values=out, geometry=geo)


def overlap_add(m):
    """Sum chunk halves back onto their source columns; inverse of chunk up to coverage.

    Raw sums, no normalization: a column covered by two chunks receives both
    contributions.  Use `coverage` to renormalize where a literal inverse is
    needed.
    """
    geo = m.geometry
    v = m.values
    if v.ndim != 3 or v.shape[1] != geo.C:
        raise ShapeError(f"chunked values {v.shape} inconsistent with geometry C={geo.C}")
    if v.shape[2] != geo.I:
        raise ShapeError(f"chunk count {v.shape[2]} inconsistent with geometry I={geo.I}")
    full = kernels.chunk_scatter(np.ascontiguousarray(v.data), geo.padded_K)
    data = np.ascontiguousarray(full[:, geo.pad_front : geo.pad_front + geo.source_K])
    out = Tensor(data, requires_grad=v.requires_grad, dtype=data.dtype)

    def backward(g):
        padded = np.zeros((g.shape[0], geo.padded_K), dtype=g.dtype)
        padded[:, geo.pad_front : geo.pad_front + geo.source_K] = g
        return (kernels.chunk_gather(padded, geo.C),)

    T.push_node(out, (v,), backward)
    return out


def coverage(K, C):
    """Number of chunks covering each of the K source columns (1 or 2)."""
    geo = chunk_geometry(K, C)
    hop = C // 2
    counts = np.zeros(geo.padded_K, dtype=np.int64)
    for i in range(geo.I):
        counts[i * hop : i * hop + C] += 1
    return counts[geo.pad_front : geo.pad_front + K]


def align_cue(v, I):
    """Reconcile a cue sequence (N, len) with the chunk count I.

    Padding makes the chunk count overshoot the video frame count by at most
    one; larger gaps mean the L/C/frame-rate configuration is wrong.
    Truncates, or edge-replicates the last frame.
    """
    length = v.shape[1]
    if abs(length - I) > 2:
        raise AlignmentError(
            f"cue length {length} vs chunk count {I}: gap exceeds 2; "
            "check kernel size / chunk length / cue frame rate"
        )
    if length == I:
        return v
    if length > I:
        return v[:, :I]
    reps = [v] + [v[:, length - 1 : length]] * (I - length)
    return T.concat(reps, axis=1)
