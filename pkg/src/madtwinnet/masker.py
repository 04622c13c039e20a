"""First stage: frequency trimming, Bi-GRU encoder, GRU decoder, sparsifying mask.

Every function accepts a single sequence ``(T, N)`` or a batch ``(B, T, N)``
and returns arrays of the same rank. Functions ending in ``_backward`` take
the cache produced by the matching forward call.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, NumericError
from .gru import gru_backward, gru_forward

ALIGNMENTS = ("realigned", "literal")


@dataclass(frozen=True)
class MaskerConfig:
    N: int = 2049
    F: int = 744
    T: int = 60
    L: int = 10
    encoder_alignment: str = "realigned"

    def __post_init__(self):
        if not 0 < self.F <= self.N:
            raise InvalidArgumentError(f"need 0 < F <= N, got F={self.F}, N={self.N}")
        if self.L < 0 or self.T <= 2 * self.L:
            raise InvalidArgumentError(f"need T > 2L >= 0, got T={self.T}, L={self.L}")
        if self.encoder_alignment not in ALIGNMENTS:
            raise InvalidArgumentError(f"encoder_alignment must be one of {ALIGNMENTS}")


def _batched(x):
    x = np.asarray(x, dtype=np.float64)
    return (x[None], True) if x.ndim == 2 else (x, False)


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values in {what}")


def trim(v_in, F):
    """Keep the lowest ``F`` frequency bins."""
    v_in = np.asarray(v_in)
    if F > v_in.shape[-1]:
        raise InvalidArgumentError(f"cannot keep {F} bins out of {v_in.shape[-1]}")
    return v_in[..., :F]


def encode(v_tr, params, L, alignment="realigned", return_cache=False):
    """Bidirectional GRU encoder with residual input connections.

    ``params`` maps ``enc_fwd`` and ``enc_bwd`` to GRU parameter dicts. The
    forward stream at position ``t`` is ``h_t + v_t``. With ``realigned`` the
    backward state that has consumed frames ``T..t`` is paired with ``v_t``;
    with ``literal`` the ``t``-th backward output is paired with the ``t``-th
    reversed frame. The first and last ``L`` positions are dropped.
    """
    if alignment not in ALIGNMENTS:
        raise InvalidArgumentError(f"alignment must be one of {ALIGNMENTS}")
    x, squeeze = _batched(v_tr)
    _check_finite(x, "encoder input")
    T = x.shape[1]
    if T <= 2 * L:
        raise InvalidArgumentError(f"sequence of {T} frames is too short for L={L}")
    reversed_x = x[:, ::-1]
    h_fwd, cache_fwd = gru_forward(x, params["enc_fwd"])
    h_bwd, cache_bwd = gru_forward(reversed_x, params["enc_bwd"])
    if alignment == "literal":
        back = h_bwd + reversed_x
    else:
        back = h_bwd[:, ::-1] + x
    h_enc = np.concatenate([h_fwd + x, back], axis=2)[:, L:T - L]
    if squeeze:
        h_enc = h_enc[0]
    if return_cache:
        return h_enc, (cache_fwd, cache_bwd, alignment, L, T)
    return h_enc


def encode_backward(d_h_enc, cache):
    """Parameter gradients of the encoder given ``dL/dH_enc`` (batched)."""
    cache_fwd, cache_bwd, alignment, L, T = cache
    batch, _, width = d_h_enc.shape
    F = width // 2
    full = np.zeros((batch, T, width))
    full[:, L:T - L] = d_h_enc
    d_back = full[:, :, F:]
    if alignment == "literal":
        d_h_bwd = d_back
    else:
        d_h_bwd = d_back[:, ::-1]
    _, g_fwd = gru_backward(full[:, :, :F], cache_fwd)
    _, g_bwd = gru_backward(np.ascontiguousarray(d_h_bwd), cache_bwd)
    return {"enc_fwd": g_fwd, "enc_bwd": g_bwd}


def decode(h_enc, params, return_cache=False):
    """Forward-in-time GRU decoder; states lie in [-1, 1]."""
    x, squeeze = _batched(h_enc)
    _check_finite(x, "decoder input")
    h_dec, cache = gru_forward(x, params)
    if squeeze:
        h_dec = h_dec[0]
    return (h_dec, cache) if return_cache else h_dec


def sparsify(h_dec, W, b):
    """Non-negative mask ``relu(H_dec W + b)``."""
    return np.maximum(np.asarray(h_dec) @ W + b, 0.0)


def sparsify_backward(d_mask, h_dec, W, b):
    """Return ``(dH_dec, dW, db)`` for :func:`sparsify` (batched inputs)."""
    pre = h_dec @ W + b
    d_pre = d_mask * (pre > 0)
    flat_h = h_dec.reshape(-1, h_dec.shape[-1])
    flat_d = d_pre.reshape(-1, d_pre.shape[-1])
    return d_pre @ W.T, flat_h.T @ flat_d, flat_d.sum(axis=0)


def apply_skip_filter(mask, v_in_central):
    mask = np.asarray(mask)
    v_in_central = np.asarray(v_in_central)
    if mask.shape != v_in_central.shape:
        raise InvalidArgumentError(f"mask {mask.shape} and input {v_in_central.shape} differ")
    return mask * v_in_central


def central_frames(v_in, L):
    """Frames ``L .. T-L-1`` of each window (the ones being estimated)."""
    v_in = np.asarray(v_in)
    T = v_in.shape[-2]
    return v_in[..., L:T - L, :]


def masker_forward(v_in, params, cfg):
    """Masker output and decoder states for ``v_in`` of shape ``(T, N)`` or ``(B, T, N)``.

    ``params`` is a :class:`~madtwinnet.params.ParameterSet`.

    Returns
    -------
    v_filt : np.ndarray
        Masked estimate of the central ``T - 2L`` frames over all ``N`` bins.
    h_dec : np.ndarray
        Decoder states, width ``F``.
    """
    x, squeeze = _batched(v_in)
    if x.shape[-1] != cfg.N:
        raise InvalidArgumentError(f"input has {x.shape[-1]} bins, expected {cfg.N}")
    enc = {"enc_fwd": params.group("masker.enc_fwd"), "enc_bwd": params.group("masker.enc_bwd")}
    h_enc = encode(trim(x, cfg.F), enc, cfg.L, cfg.encoder_alignment)
    h_dec = decode(h_enc, params.group("masker.dec"))
    mask = sparsify(h_dec, params["masker.fnn.W"], params["masker.fnn.b"])
    v_filt = apply_skip_filter(mask, central_frames(x, cfg.L))
    if squeeze:
        return v_filt[0], h_dec[0]
    return v_filt, h_dec
