"""Backward-running twin of the Masker decoder and its regularisation cost.

The twin exists only at training time. It reads the encoder output in
reversed time order, and its states (re-reversed to forward time) are the
regression targets for an affine map of the forward decoder states.
"""
import numpy as np

from .exceptions import InvalidArgumentError
from .gru import gru_backward, gru_forward
from .masker import _batched, sparsify


def twin_forward(h_enc, v_in_central, dec_params, W, b, return_cache=False):
    """Twin estimate ``V_twin`` and twin states ``H_twin`` (forward time order)."""
    x, squeeze = _batched(h_enc)
    v, _ = _batched(v_in_central)
    h_rev, cache = gru_forward(np.ascontiguousarray(x[:, ::-1]), dec_params)
    h_twin = h_rev[:, ::-1]
    v_twin = sparsify(h_twin, W, b) * v
    if squeeze:
        v_twin, h_twin = v_twin[0], h_twin[0]
    if return_cache:
        return v_twin, h_twin, cache
    return v_twin, h_twin


def twin_decoder_backward(d_h_twin, cache):
    """Gradients of the twin decoder; returns ``(dH_enc, grads)`` in forward time."""
    d_x_rev, grads = gru_backward(np.ascontiguousarray(d_h_twin[:, ::-1]), cache)
    return d_x_rev[:, ::-1], grads


def _frame_distances(h_dec, h_twin, bridge_W, bridge_b):
    h_dec = np.asarray(h_dec, dtype=np.float64)
    h_twin = np.asarray(h_twin, dtype=np.float64)
    if h_dec.shape != h_twin.shape:
        raise InvalidArgumentError(f"decoder states {h_dec.shape} and twin states {h_twin.shape} differ")
    diff = h_dec @ bridge_W + bridge_b - h_twin
    return diff, np.sqrt(np.sum(diff * diff, axis=-1))


def twin_regularization_loss(h_dec, h_twin, bridge_W, bridge_b):
    """Sum over frames of ``||f(h_dec_t) - h_twin_t||_2`` with affine ``f``."""
    _, dist = _frame_distances(h_dec, h_twin, bridge_W, bridge_b)
    return float(dist.sum())


def twin_regularization_backward(h_dec, h_twin, bridge_W, bridge_b, scale=1.0):
    """Gradients of ``scale * twin_regularization_loss``.

    Returns ``(dH_dec, dH_twin, dW, db)``; frames with zero distance get a
    zero subgradient.
    """
    diff, dist = _frame_distances(h_dec, h_twin, bridge_W, bridge_b)
    safe = np.where(dist > 0, dist, 1.0)
    g = scale * np.where(dist[..., None] > 0, diff / safe[..., None], 0.0)
    flat_h = h_dec.reshape(-1, h_dec.shape[-1])
    flat_g = g.reshape(-1, g.shape[-1])
    return g @ bridge_W.T, -g, flat_h.T @ flat_g, flat_g.sum(axis=0)
