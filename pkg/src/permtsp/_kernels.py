"""Compiled forward/backward pass of the relaxed loss for the solver's inner loop.

Same mathematics as the NumPy path in :mod:`permtsp.relaxation`, but the
Sinkhorn sweeps run in the linear domain on ``exp(x - max(x))``, which is
exact as long as the spread of ``x`` stays far from the float64 exponent range.
Callers check the spread first (see ``LINEAR_SPREAD_LIMIT``).
"""

from __future__ import annotations

import numpy as np
from numba import njit

LINEAR_SPREAD_LIMIT = 200.0


@njit(cache=True)
def _one(dist, raw, noise, k, alpha, gamma, tau, iters, grad_out):
    n = raw.shape[0]
    th = np.tanh(raw)
    x = (alpha * th + gamma * noise) / tau
    tape = np.empty((2 * iters + 1, n, n))
    scale = np.empty((2 * iters, n))
    t = tape[0]
    xmax = x.max()
    for i in range(n):
        for j in range(n):
            t[i, j] = np.exp(x[i, j] - xmax)
    for it in range(iters):
        src = tape[2 * it]
        dst = tape[2 * it + 1]
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += src[i, j]
            scale[2 * it, i] = s
            for j in range(n):
                dst[i, j] = src[i, j] / s
        src = dst
        dst = tape[2 * it + 2]
        col = scale[2 * it + 1]
        for j in range(n):
            col[j] = 0.0
        for i in range(n):
            for j in range(n):
                col[j] += src[i, j]
        for i in range(n):
            for j in range(n):
                dst[i, j] = src[i, j] / col[j]
    t = tape[2 * iters]

    # loss = sum_ij D[i, j] sum_m T[i, m] T[j, m + k]
    dt_next = np.zeros((n, n))  # (D @ T_next)[i, m]
    dt_prev = np.zeros((n, n))  # (D^T @ T_prev)[j, m]
    for i in range(n):
        for j in range(n):
            d = dist[i, j]
            if d == 0.0:
                continue
            for m in range(n):
                dt_next[i, m] += d * t[j, (m + k) % n]
                dt_prev[j, m] += d * t[i, (m - k) % n]
    loss = 0.0
    g = np.empty((n, n))
    for i in range(n):
        for m in range(n):
            loss += t[i, m] * dt_next[i, m]
            g[i, m] = dt_next[i, m] + dt_prev[i, m]

    for it in range(iters - 1, -1, -1):
        # column half-step: t' = t / c_j
        out = tape[2 * it + 2]
        col = scale[2 * it + 1]
        for j in range(n):
            acc = 0.0
            for i in range(n):
                acc += g[i, j] * out[i, j]
            for i in range(n):
                g[i, j] = (g[i, j] - acc) / col[j]
        # row half-step: t' = t / r_i
        out = tape[2 * it + 1]
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += g[i, j] * out[i, j]
            r = scale[2 * it, i]
            for j in range(n):
                g[i, j] = (g[i, j] - acc) / r
    k0 = tape[0]
    c = alpha / tau
    for i in range(n):
        for j in range(n):
            grad_out[i, j] = g[i, j] * k0[i, j] * c * (1.0 - th[i, j] * th[i, j])
    return loss


@njit(cache=True)
def loss_and_grad_linear(dist, raw, noise, k, alpha, gamma, tau, iters):
    b = raw.shape[0]
    losses = np.empty(b)
    grads = np.empty_like(raw)
    for r in range(b):
        losses[r] = _one(dist, raw[r], noise[r], k, alpha, gamma, tau, iters, grads[r])
    return losses, grads
