"""Pure-numpy kernel implementations.

These are the fallback for the compiled extension.  Gathers are stride-trick
views feeding BLAS; scatters are strided in-place adds, looped over the short
axis (kernel tap / intra-chunk offset) so each strided add touches disjoint
targets.

Scatter accumulation order per output element is ascending tap index in both
backends, which keeps `chunk_scatter` bit-identical to the compiled kernels
(at most two contributions per column, added in the same order).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_fwd(x, w, stride):
    """Correlate x (T,) with filter bank w (N, L) at the given stride -> (N, K)."""
    L = w.shape[1]
    windows = sliding_window_view(x, L)[::stride]  # (K, L)
    return w @ windows.T


def conv1d_bwd_x(gout, w, stride, T):
    """Adjoint of conv1d_fwd in x: scatter gout (N, K) back to (T,)."""
    N, K = gout.shape
    L = w.shape[1]
    g = w.T @ gout  # (L, K): per-tap contributions
    dx = np.zeros(T, dtype=gout.dtype)
    for tap in range(L):
        dx[tap : tap + stride * K : stride] += g[tap]
    return dx


def conv1d_bwd_w(gout, x, stride, L):
    """Adjoint of conv1d_fwd in w: gout (N, K), x (T,) -> (N, L)."""
    windows = sliding_window_view(x, L)[::stride]  # (K, L)
    return gout @ windows


def chunk_gather(xp, C):
    """Split padded columns xp (N, Kp) into chunks of width C, hop C//2 -> (N, C, I)."""
    hop = C // 2
    windows = sliding_window_view(xp, C, axis=1)[:, ::hop]  # (N, I, C) view
    return np.ascontiguousarray(windows.transpose(0, 2, 1))


def chunk_scatter(m, Kp):
    """Adjoint of chunk_gather: sum chunks m (N, C, I) back onto (N, Kp) columns."""
    N, C, I = m.shape
    hop = C // 2
    out = np.zeros((N, Kp), dtype=m.dtype)
    for c in range(C):
        out[:, c : c + hop * I : hop] += m[:, c, :]
    return out
