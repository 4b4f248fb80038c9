"""Numba-jitted twins of the kernels in ``_kernels_numpy``.

Same flat parameter and cache layouts. Matrix products go through ``np.dot``
(BLAS) on contiguous blocks; the bias add, activations, and their derivatives
are fused loops, which removes the per-op numpy dispatch overhead that
dominates at these matrix sizes. Results agree with the numpy path to
floating-point roundoff.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ACT_TANH = 0
ACT_RELU = 1


def param_count(widths) -> int:
    total = 0
    for l in range(len(widths) - 1):
        total += int(widths[l + 1]) * int(widths[l]) + int(widths[l + 1])
    return total


@njit(cache=True)
def mlp_forward(params, widths, act_id, x):
    n_layers = widths.shape[0] - 1
    batch = x.shape[0]
    total = 0
    for i in range(widths.shape[0]):
        total += widths[i]
    cache = np.empty(batch * total, dtype=np.float64)

    a = np.empty((batch, widths[0]), dtype=np.float64)
    for b in range(batch):
        for j in range(widths[0]):
            a[b, j] = x[b, j]
    cache[: batch * widths[0]] = a.ravel()

    p = 0
    col = batch * widths[0]
    for l in range(n_layers):
        n_in = widths[l]
        n_out = widths[l + 1]
        w = params[p : p + n_out * n_in].reshape(n_out, n_in)
        z = np.dot(a, w.T)
        bias_at = p + n_out * n_in
        last = l == n_layers - 1
        for b in range(batch):
            for j in range(n_out):
                v = z[b, j] + params[bias_at + j]
                if not last:
                    if act_id == ACT_TANH:
                        v = math.tanh(v)
                    elif v < 0.0:
                        v = 0.0
                z[b, j] = v
        a = z
        cache[col : col + batch * n_out] = a.ravel()
        p = bias_at + n_out
        col += batch * n_out
    return a, cache


@njit(cache=True)
def mlp_backward(params, widths, act_id, cache, upstream):
    n_layers = widths.shape[0] - 1
    batch = upstream.shape[0]
    dparams = np.zeros_like(params)

    offs = np.zeros(widths.shape[0], dtype=np.int64)
    for i in range(1, widths.shape[0]):
        offs[i] = offs[i - 1] + batch * widths[i - 1]
    p_offs = np.zeros(n_layers, dtype=np.int64)
    for l in range(1, n_layers):
        p_offs[l] = p_offs[l - 1] + widths[l] * (widths[l - 1] + 1)

    g = np.empty((batch, widths[n_layers]), dtype=np.float64)
    for b in range(batch):
        for j in range(widths[n_layers]):
            g[b, j] = upstream[b, j]

    for l in range(n_layers - 1, -1, -1):
        n_in = widths[l]
        n_out = widths[l + 1]
        a_prev = cache[offs[l] : offs[l] + batch * n_in].reshape(batch, n_in)
        if l < n_layers - 1:
            a_out = cache[offs[l + 1] : offs[l + 1] + batch * n_out].reshape(batch, n_out)
            for b in range(batch):
                for j in range(n_out):
                    a = a_out[b, j]
                    if act_id == ACT_TANH:
                        g[b, j] *= 1.0 - a * a
                    elif a <= 0.0:
                        g[b, j] = 0.0
        w_at = p_offs[l]
        bias_at = w_at + n_out * n_in
        dw = np.dot(g.T, a_prev)
        dparams[w_at : w_at + n_out * n_in] = dw.ravel()
        for j in range(n_out):
            db = 0.0
            for b in range(batch):
                db += g[b, j]
            dparams[bias_at + j] = db
        w = params[w_at : w_at + n_out * n_in].reshape(n_out, n_in)
        g = np.dot(g, w)
    return dparams, g
