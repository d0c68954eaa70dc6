# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: conv unfold/fold and guided-sampling gather/scatter.

Contracts mirror kernels._numpy exactly, including accumulation order
(scatter adds in pixel row-major order), so outputs are bit-identical
between the two backends.
"""

import numpy as np

cimport cython

NAME = "compiled"

ctypedef fused real:
    float
    double


def conv_out_hw(h, w, k, stride, padding):
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    return ho, wo


def im2col(real[:, :, :, ::1] x, int k, int stride, int padding):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = (h + 2 * padding - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * padding - k) // stride + 1
    if real is double:
        dtype = np.float64
    else:
        dtype = np.float32
    out_arr = np.zeros((n, c * k * k, ho * wo), dtype=dtype)
    cdef real[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, ch, i, j, oy, ox, iy, ix, row
    with nogil:
        for b in range(n):
            for ch in range(c):
                for i in range(k):
                    for j in range(k):
                        row = (ch * k + i) * k + j
                        for oy in range(ho):
                            iy = oy * stride - padding + i
                            if iy < 0 or iy >= h:
                                continue
                            for ox in range(wo):
                                ix = ox * stride - padding + j
                                if 0 <= ix < w:
                                    out[b, row, oy * wo + ox] = x[b, ch, iy, ix]
    return out_arr


def col2im(real[:, :, ::1] cols, x_shape, int k, int stride, int padding):
    cdef Py_ssize_t n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3]
    cdef Py_ssize_t ho = (h + 2 * padding - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * padding - k) // stride + 1
    if real is double:
        dtype = np.float64
    else:
        dtype = np.float32
    out_arr = np.zeros((n, c, h, w), dtype=dtype)
    cdef real[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, ch, i, j, oy, ox, iy, ix, row
    with nogil:
        for b in range(n):
            for ch in range(c):
                for i in range(k):
                    for j in range(k):
                        row = (ch * k + i) * k + j
                        for oy in range(ho):
                            iy = oy * stride - padding + i
                            if iy < 0 or iy >= h:
                                continue
                            for ox in range(wo):
                                ix = ox * stride - padding + j
                                if 0 <= ix < w:
                                    out[b, ch, iy, ix] += cols[b, row, oy * wo + ox]
    return out_arr


def gather_class_params(real[:, ::1] table, int[:, ::1] labels):
    cdef Py_ssize_t c = table.shape[1]
    cdef Py_ssize_t h = labels.shape[0], w = labels.shape[1]
    if real is double:
        dtype = np.float64
    else:
        dtype = np.float32
    out_arr = np.empty((c, h, w), dtype=dtype)
    cdef real[:, :, ::1] out = out_arr
    cdef Py_ssize_t ch, i, j, l
    with nogil:
        for i in range(h):
            for j in range(w):
                l = labels[i, j]
                for ch in range(c):
                    out[ch, i, j] = table[l, ch]
    return out_arr


def scatter_add_class_grads(real[:, :, ::1] grad_map, int[:, ::1] labels, int nc):
    cdef Py_ssize_t c = grad_map.shape[0]
    cdef Py_ssize_t h = grad_map.shape[1], w = grad_map.shape[2]
    if real is double:
        dtype = np.float64
    else:
        dtype = np.float32
    out_arr = np.zeros((nc, c), dtype=dtype)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t ch, i, j, l
    with nogil:
        # pixel row-major accumulation order, matching np.add.at in the fallback
        for i in range(h):
            for j in range(w):
                l = labels[i, j]
                for ch in range(c):
                    out[l, ch] += grad_map[ch, i, j]
    return out_arr
