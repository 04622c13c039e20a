"""Batched GRU layer with explicit backpropagation through time.

Gates are stacked in the order (update, reset, candidate)::

    z = sigmoid(x W_z + h U_z + b_z)
    r = sigmoid(x W_r + h U_r + b_r)
    n = tanh(x W_n + (r * h) U_n + b_n)
    h' = (1 - z) * n + z * h

Parameters live in a mapping with keys ``W`` (in, 3H), ``U`` (H, 3H) and
``b`` (3H,). The initial state is zero.
"""
import numpy as np


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_forward(x, params):
    """Run the GRU over ``x`` shaped (batch, time, in).

    Returns
    -------
    hs : np.ndarray, shape (batch, time, H)
    cache : tuple
        Intermediate values needed by :func:`gru_backward`.
    """
    W, U, b = params["W"], params["U"], params["b"]
    H = U.shape[0]
    batch, steps, _ = x.shape
    xw = x @ W + b
    hs = np.empty((batch, steps, H))
    zs, rs, ns = np.empty_like(hs), np.empty_like(hs), np.empty_like(hs)
    h = np.zeros((batch, H))
    prev = np.empty_like(hs)
    for t in range(steps):
        prev[:, t] = h
        zr = sigmoid(xw[:, t, :2 * H] + h @ U[:, :2 * H])
        z, r = zr[:, :H], zr[:, H:]
        n = np.tanh(xw[:, t, 2 * H:] + (r * h) @ U[:, 2 * H:])
        h = (1.0 - z) * n + z * h
        zs[:, t], rs[:, t], ns[:, t], hs[:, t] = z, r, n, h
    return hs, (x, params, prev, zs, rs, ns)


def gru_backward(dhs, cache):
    """Backpropagate ``dL/dhs`` through the GRU.

    Returns ``(dx, grads)`` where ``grads`` has the same keys as the params.
    """
    x, params, prev, zs, rs, ns = cache
    W, U = params["W"], params["U"]
    H = U.shape[0]
    batch, steps, _ = x.shape
    da = np.empty((batch, steps, 3 * H))
    dU = np.zeros_like(U)
    dh = np.zeros((batch, H))
    for t in reversed(range(steps)):
        h_prev, z, r, n = prev[:, t], zs[:, t], rs[:, t], ns[:, t]
        dh = dh + dhs[:, t]
        da_n = dh * (1.0 - z) * (1.0 - n * n)
        da_z = dh * (h_prev - n) * z * (1.0 - z)
        drh = da_n @ U[:, 2 * H:].T
        da_r = drh * h_prev * r * (1.0 - r)
        dU[:, 2 * H:] += (r * h_prev).T @ da_n
        da_zr = np.concatenate([da_z, da_r], axis=1)
        dU[:, :2 * H] += h_prev.T @ da_zr
        dh = dh * z + drh * r + da_zr @ U[:, :2 * H].T
        da[:, t, :2 * H] = da_zr
        da[:, t, 2 * H:] = da_n
    flat_x = x.reshape(-1, x.shape[-1])
    flat_da = da.reshape(-1, 3 * H)
    grads = {"W": flat_x.T @ flat_da, "U": dU, "b": flat_da.sum(axis=0)}
    return da @ W.T, grads
