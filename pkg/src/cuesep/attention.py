"""Multi-head self- and cross-attention transformer blocks.

Shared machinery for the intra-chunk, inter-chunk and cross-modal stages.
Blocks are pre-norm residual: x + attn(norm(x)) followed by x + ffn(norm(x)),
with a ReLU feed-forward of width ffn_mult * N.  All functions accept
arbitrary leading batch dimensions ahead of the (length, feature) pair, so
per-chunk / per-slice applications run as one batched call.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import AlignmentError, ShapeError
from .tensor import Tensor


@dataclass
class TransformerBlockWeights:
    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    ln1_gamma: Tensor
    ln1_beta: Tensor
    ln2_gamma: Tensor
    ln2_beta: Tensor


def init_block(N, ffn_mult, rng, dtype=None):
    hidden = ffn_mult * N
    lin = lambda fan_in, shape: T.uniform(shape, 1.0 / math.sqrt(fan_in), rng, dtype=dtype)
    return TransformerBlockWeights(
        wq=lin(N, (N, N)),
        wk=lin(N, (N, N)),
        wv=lin(N, (N, N)),
        wo=lin(N, (N, N)),
        w1=lin(N, (N, hidden)),
        b1=T.zeros((hidden,), dtype=dtype, requires_grad=True),
        w2=lin(hidden, (hidden, N)),
        b2=T.zeros((N,), dtype=dtype, requires_grad=True),
        ln1_gamma=T.ones((N,), dtype=dtype, requires_grad=True),
        ln1_beta=T.zeros((N,), dtype=dtype, requires_grad=True),
        ln2_gamma=T.ones((N,), dtype=dtype, requires_grad=True),
        ln2_beta=T.zeros((N,), dtype=dtype, requires_grad=True),
    )


def block_parameters(w, prefix):
    for field in (
        "wq", "wk", "wv", "wo",
        "w1", "b1", "w2", "b2",
        "ln1_gamma", "ln1_beta", "ln2_gamma", "ln2_beta",
    ):
        yield f"{prefix}.{field}", getattr(w, field)


def _split_heads(x, n_head):
    # (..., L, N) -> (..., H, L, N/H)
    *lead, L, N = x.shape
    x = T.reshape(x, (*lead, L, n_head, N // n_head))
    nd = x.ndim
    axes = list(range(nd))
    axes[nd - 3], axes[nd - 2] = axes[nd - 2], axes[nd - 3]
    return T.permute(x, axes)


def _merge_heads(x):
    # (..., H, L, dh) -> (..., L, H*dh)
    nd = x.ndim
    axes = list(range(nd))
    axes[nd - 3], axes[nd - 2] = axes[nd - 2], axes[nd - 3]
    x = T.permute(x, axes)
    *lead, L, H, dh = x.shape
    return T.reshape(x, (*lead, L, H * dh))


def _swap_last(x):
    nd = x.ndim
    axes = list(range(nd))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return T.permute(x, axes)


def mha(q, k, v, w, n_head, return_weights=False):
    """Scaled dot-product attention over heads; q (..., Lq, N), k/v (..., Lk, N)."""
    N = q.shape[-1]
    if N % n_head != 0:
        raise ShapeError(f"head count {n_head} must divide feature dim {N}")
    if k.shape != v.shape:
        raise ShapeError(f"key/value shapes differ: {k.shape} vs {v.shape}")
    qh = _split_heads(T.matmul(q, w.wq), n_head)
    kh = _split_heads(T.matmul(k, w.wk), n_head)
    vh = _split_heads(T.matmul(v, w.wv), n_head)
    scale = 1.0 / math.sqrt(N // n_head)
    scores = T.mul(T.matmul(qh, _swap_last(kh)), scale)
    weights = T.softmax_lastdim(scores)
    ctx = _merge_heads(T.matmul(weights, vh))
    out = T.matmul(ctx, w.wo)
    if return_weights:
        return out, weights.numpy()
    return out


def _ffn(x, w):
    return T.add(T.matmul(T.relu(T.add(T.matmul(x, w.w1), w.b1)), w.w2), w.b2)


def _dropout(x, p, rng):
    if p <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return T.mul(x, Tensor(keep, dtype=x.data.dtype))


def self_block(x, w, n_head, dropout_p=0.0, rng=None):
    """Pre-norm residual self-attention block; shape-preserving on (..., L, N)."""
    xn = T.layernorm(x, w.ln1_gamma, w.ln1_beta)
    h = T.add(x, _dropout(mha(xn, xn, xn, w, n_head), dropout_p, rng))
    hn = T.layernorm(h, w.ln2_gamma, w.ln2_beta)
    return T.add(h, _dropout(_ffn(hn, w), dropout_p, rng))


def cross_block(q_seq, kv_seq, w, n_head, dropout_p=0.0, rng=None):
    """Query stream attends into key/value stream; residual rides the query side.

    Both streams must be at the same (chunk-level) granularity, so their
    lengths must match.
    """
    if q_seq.shape[-2] != kv_seq.shape[-2]:
        raise AlignmentError(
            f"cross-attention needs equal sequence lengths, got {q_seq.shape[-2]} vs {kv_seq.shape[-2]}"
        )
    qn = T.layernorm(q_seq, w.ln1_gamma, w.ln1_beta)
    kn = T.layernorm(kv_seq, w.ln1_gamma, w.ln1_beta)
    h = T.add(q_seq, _dropout(mha(qn, kn, kn, w, n_head), dropout_p, rng))
    hn = T.layernorm(h, w.ln2_gamma, w.ln2_beta)
    return T.add(h, _dropout(_ffn(hn, w), dropout_p, rng))


def identity_block_weights(N, ffn_mult, dtype=None):
    """Blocks whose attention and ffn outputs are zero: the residual path only.

    Test helper: wo and w2 are zero, so self_block(x) == x exactly.
    """
    rng = np.random.default_rng(0)
    w = init_block(N, ffn_mult, rng, dtype=dtype)
    w.wo = T.zeros((N, N), dtype=dtype, requires_grad=True)
    w.w2 = T.zeros((ffn_mult * N, N), dtype=dtype, requires_grad=True)
    return w
