"""Pure-numpy implementations of the hot kernels.

Same contracts and the same accumulation order as the compiled core in
``_core.pyx``: scatter adds run in pixel row-major order, so the two
backends produce bit-identical results.
"""

import numpy as np

NAME = "python"


def conv_out_hw(h, w, k, stride, padding):
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    return ho, wo


def im2col(x, k, stride, padding):
    """Unfold (N,C,H,W) into (N, C*k*k, Ho*Wo) patch columns."""
    n, c, h, w = x.shape
    ho, wo = conv_out_hw(h, w, k, stride, padding)
    if padding > 0:
        xp = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=x.dtype)
        xp[:, :, padding : padding + h, padding : padding + w] = x
    else:
        xp = x
    cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride]
    return cols.reshape(n, c * k * k, ho * wo)


def col2im(cols, x_shape, k, stride, padding):
    """Adjoint of im2col: fold (N, C*k*k, Ho*Wo) back onto (N,C,H,W), accumulating overlaps."""
    n, c, h, w = x_shape
    ho, wo = conv_out_hw(h, w, k, stride, padding)
    cols = cols.reshape(n, c, k, k, ho, wo)
    xp = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += cols[:, :, i, j]
    if padding > 0:
        return xp[:, :, padding : padding + h, padding : padding + w].copy()
    return xp


def gather_class_params(table, labels):
    """Per-pixel lookup: (Nc,C) table + (H,W) labels -> (C,H,W) dense map."""
    return np.ascontiguousarray(table[labels].transpose(2, 0, 1))


def scatter_add_class_grads(grad_map, labels, nc):
    """Adjoint of gather: sum (C,H,W) rows into (Nc,C) by pixel class, row-major pixel order."""
    c = grad_map.shape[0]
    out = np.zeros((nc, c), dtype=grad_map.dtype)
    np.add.at(out, labels.reshape(-1), grad_map.reshape(c, -1).T)
    return out
