# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the conv/chunk hot loops.

Same contracts as kernels.reference; accumulation order per output element
matches the reference scatters (ascending tap index) so chunk_scatter stays
bit-identical across backends.
"""

import numpy as np


ctypedef fused real:
    float
    double


def conv1d_fwd(real[::1] x, real[:, ::1] w, int stride):
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t N = w.shape[0]
    cdef Py_ssize_t L = w.shape[1]
    cdef Py_ssize_t K = (T - L) // stride + 1
    if real is float:
        out_arr = np.zeros((N, K), dtype=np.float32)
    else:
        out_arr = np.zeros((N, K), dtype=np.float64)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t n, k, l, base
    cdef real acc
    for n in range(N):
        for k in range(K):
            base = k * stride
            acc = 0
            for l in range(L):
                acc += w[n, l] * x[base + l]
            out[n, k] = acc
    return out_arr


def conv1d_bwd_x(real[:, ::1] gout, real[:, ::1] w, int stride, Py_ssize_t T):
    cdef Py_ssize_t N = gout.shape[0]
    cdef Py_ssize_t K = gout.shape[1]
    cdef Py_ssize_t L = w.shape[1]
    if real is float:
        dx_arr = np.zeros(T, dtype=np.float32)
    else:
        dx_arr = np.zeros(T, dtype=np.float64)
    cdef real[::1] dx = dx_arr
    cdef Py_ssize_t n, k, l, base
    cdef real g
    # tap-major accumulation to mirror the reference scatter order
    for l in range(L):
        for k in range(K):
            base = k * stride + l
            g = 0
            for n in range(N):
                g += w[n, l] * gout[n, k]
            dx[base] += g
    return dx_arr


def conv1d_bwd_w(real[:, ::1] gout, real[::1] x, int stride, Py_ssize_t L):
    cdef Py_ssize_t N = gout.shape[0]
    cdef Py_ssize_t K = gout.shape[1]
    if real is float:
        dw_arr = np.zeros((N, L), dtype=np.float32)
    else:
        dw_arr = np.zeros((N, L), dtype=np.float64)
    cdef real[:, ::1] dw = dw_arr
    cdef Py_ssize_t n, k, l, base
    cdef real g
    for n in range(N):
        for k in range(K):
            g = gout[n, k]
            base = k * stride
            for l in range(L):
                dw[n, l] += g * x[base + l]
    return dw_arr


def chunk_gather(real[:, ::1] xp, int C):
    cdef Py_ssize_t N = xp.shape[0]
    cdef Py_ssize_t Kp = xp.shape[1]
    cdef int hop = C // 2
    cdef Py_ssize_t I = (Kp - C) // hop + 1
    if real is float:
        out_arr = np.zeros((N, C, I), dtype=np.float32)
    else:
        out_arr = np.zeros((N, C, I), dtype=np.float64)
    cdef real[:, :, ::1] out = out_arr
    cdef Py_ssize_t n, c, i
    for n in range(N):
        for c in range(C):
            for i in range(I):
                out[n, c, i] = xp[n, i * hop + c]
    return out_arr


def chunk_scatter(real[:, :, ::1] m, Py_ssize_t Kp):
    cdef Py_ssize_t N = m.shape[0]
    cdef Py_ssize_t C = m.shape[1]
    cdef Py_ssize_t I = m.shape[2]
    cdef int hop = <int> (C // 2)
    if real is float:
        out_arr = np.zeros((N, Kp), dtype=np.float32)
    else:
        out_arr = np.zeros((N, Kp), dtype=np.float64)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t n, c, i
    # c-major per row: contributions land in ascending-c order, like reference
    for n in range(N):
        for c in range(C):
            for i in range(I):
                out[n, i * hop + c] += m[n, c, i]
    return out_arr
