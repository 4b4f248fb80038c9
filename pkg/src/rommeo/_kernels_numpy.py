"""Pure-numpy MLP kernels (reference implementation for the numba twins).

Parameter layout is a single flat float64 vector: for each layer ``l`` the
weight matrix ``W_l`` of shape ``(widths[l+1], widths[l])`` row-major,
followed by the bias ``b_l``.

The forward cache is a flat vector of per-layer contiguous blocks: block
``l`` holds activation ``l`` as a C-order ``(batch, widths[l])`` matrix
(input included, post-nonlinearity for hidden layers), so the backward pass
needs no recomputation and every block is a valid BLAS operand.

Activation ids: 0 = tanh, 1 = relu. Hidden layers only; the output is linear.
"""

from __future__ import annotations

import numpy as np

ACT_TANH = 0
ACT_RELU = 1


def param_count(widths) -> int:
    total = 0
    for l in range(len(widths) - 1):
        total += int(widths[l + 1]) * int(widths[l]) + int(widths[l + 1])
    return total


def mlp_forward(params, widths, act_id, x):
    """Evaluate the network on a batch. Returns ``(out, cache)``."""
    n_layers = len(widths) - 1
    batch = x.shape[0]
    cache = np.empty(batch * int(np.sum(widths)), dtype=np.float64)
    a = np.ascontiguousarray(x, dtype=np.float64)
    cache[: a.size] = a.ravel()
    p = 0
    col = batch * int(widths[0])
    for l in range(n_layers):
        n_in = int(widths[l])
        n_out = int(widths[l + 1])
        w = params[p : p + n_out * n_in].reshape(n_out, n_in)
        b = params[p + n_out * n_in : p + n_out * (n_in + 1)]
        p += n_out * (n_in + 1)
        z = a @ w.T + b
        if l < n_layers - 1:
            a = np.tanh(z) if act_id == ACT_TANH else np.maximum(z, 0.0)
        else:
            a = z
        cache[col : col + batch * n_out] = a.ravel()
        col += batch * n_out
    return a, cache


def mlp_backward(params, widths, act_id, cache, upstream):
    """Reverse-mode pass. Returns ``(dparams, dx)``.

    ``dparams`` is summed over the batch; scale ``upstream`` by ``1/batch``
    for a mean-reduced loss.
    """
    n_layers = len(widths) - 1
    batch = upstream.shape[0]
    dparams = np.zeros_like(params)

    offs = np.zeros(len(widths), dtype=np.int64)
    for i in range(1, len(widths)):
        offs[i] = offs[i - 1] + batch * int(widths[i - 1])
    p_offs = np.zeros(n_layers, dtype=np.int64)
    for l in range(1, n_layers):
        p_offs[l] = p_offs[l - 1] + int(widths[l]) * (int(widths[l - 1]) + 1)

    g = upstream
    for l in range(n_layers - 1, -1, -1):
        n_in = int(widths[l])
        n_out = int(widths[l + 1])
        a_prev = cache[offs[l] : offs[l] + batch * n_in].reshape(batch, n_in)
        if l < n_layers - 1:
            a_out = cache[offs[l + 1] : offs[l + 1] + batch * n_out].reshape(batch, n_out)
            if act_id == ACT_TANH:
                g = g * (1.0 - a_out * a_out)
            else:
                g = g * (a_out > 0.0)
        w = params[p_offs[l] : p_offs[l] + n_out * n_in].reshape(n_out, n_in)
        dparams[p_offs[l] : p_offs[l] + n_out * n_in] = (g.T @ a_prev).ravel()
        dparams[p_offs[l] + n_out * n_in : p_offs[l] + n_out * (n_in + 1)] = g.sum(axis=0)
        g = g @ w
    return dparams, g
