"""Composite training objective and its analytic gradient.

Per batch the objective is::

    total = L_D + L_M + L_TW + twin_weight * L_twin
            + lambda1 * |diag(W_mask)|_1 + lambda2 * ||W_denoiser_dec||_F^2

The reconstruction terms are generalized KL divergences between the target
and the Denoiser output, the Masker output and the twin output. KL and twin
terms are summed over a sequence and averaged over the batch; the two
penalties are not averaged.
"""
from dataclasses import dataclass, fields

import numpy as np

from .denoiser import denoise, denoise_backward
from .divergence import generalized_kl, generalized_kl_grad
from .exceptions import InvalidArgumentError
from .masker import (
    apply_skip_filter,
    central_frames,
    decode,
    encode,
    encode_backward,
    sparsify,
    sparsify_backward,
    trim,
)
from .gru import gru_backward
from .twinnet import (
    twin_decoder_backward,
    twin_forward,
    twin_regularization_backward,
    twin_regularization_loss,
)

TWIN_BACKPROP = ("stop", "full")


def diagonal_l1(W):
    """l1 norm of entries ``W[i, i]`` for ``i < min(W.shape)``."""
    return float(np.sum(np.abs(np.diagonal(W))))


@dataclass
class LossBreakdown:
    L_D: float
    L_M: float
    L_TW: float
    L_twin: float
    diag_l1: float
    dec_l2: float
    total: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ObjectiveConfig:
    """Options of the objective and of the gradient routing through the twin."""

    lambda1: float = 1e-2
    lambda2: float = 1e-4
    twin_enabled: bool = True
    twin_weight: float = 0.5
    twin_loss_backprop: str = "stop"
    twin_shares_projection: bool = False

    def __post_init__(self):
        if self.twin_loss_backprop not in TWIN_BACKPROP:
            raise InvalidArgumentError(f"twin_loss_backprop must be one of {TWIN_BACKPROP}")
        if self.lambda1 < 0 or self.lambda2 < 0 or self.twin_weight < 0:
            raise InvalidArgumentError("loss weights must be non-negative")


@dataclass
class TrainingBatch:
    """Mixture windows ``(B, T, N)`` and voice targets for their central frames ``(B, T', N)``."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.ndim != 3 or self.targets.ndim != 3:
            raise InvalidArgumentError("batch inputs and targets must be 3-D")
        if self.inputs.shape[0] != self.targets.shape[0] or self.inputs.shape[2] != self.targets.shape[2]:
            raise InvalidArgumentError(
                f"inputs {self.inputs.shape} and targets {self.targets.shape} do not match"
            )

    def __len__(self):
        return self.inputs.shape[0]


def _twin_projection(params, obj):
    prefix = "masker.fnn" if obj.twin_shares_projection else "twin.fnn"
    return prefix, params[prefix + ".W"], params[prefix + ".b"]


def loss_breakdown(target, v_masker, v_denoiser, v_twin, h_dec, h_twin, params, obj, n_seq=1):
    """Assemble the seven reported scalars from network outputs.

    ``v_twin``/``h_twin`` may be ``None`` when the twin is disabled;
    ``h_twin`` is the regression target of the twin cost.
    """
    L_M = generalized_kl(target, v_masker) / n_seq
    L_D = generalized_kl(target, v_denoiser) / n_seq
    if obj.twin_enabled and v_twin is not None:
        L_TW = generalized_kl(target, v_twin) / n_seq
        L_twin = twin_regularization_loss(
            h_dec, h_twin, params["twin.bridge.W"], params["twin.bridge.b"]) / n_seq
    else:
        L_TW = L_twin = 0.0
    diag = diagonal_l1(params["masker.fnn.W"])
    dec = float(np.sum(params["denoiser.dec.W"] ** 2))
    total = L_D + L_M + L_TW + obj.twin_weight * L_twin + obj.lambda1 * diag + obj.lambda2 * dec
    return LossBreakdown(L_D, L_M, L_TW, L_twin, diag, dec, total)


def forward(v_in, params, mcfg, obj, with_twin=True):
    """Run Masker, Denoiser and (optionally) the twin on a batch ``(B, T, N)``.

    Returns a dict of outputs and the caches needed for :func:`backward`.
    """
    x = np.asarray(v_in, dtype=np.float64)
    enc_params = {"enc_fwd": params.group("masker.enc_fwd"), "enc_bwd": params.group("masker.enc_bwd")}
    h_enc, enc_cache = encode(trim(x, mcfg.F), enc_params, mcfg.L, mcfg.encoder_alignment,
                              return_cache=True)
    h_dec, dec_cache = decode(h_enc, params.group("masker.dec"), return_cache=True)
    v_c = central_frames(x, mcfg.L)
    mask = sparsify(h_dec, params["masker.fnn.W"], params["masker.fnn.b"])
    v_masker = apply_skip_filter(mask, v_c)
    v_denoiser, den_cache = denoise(
        v_masker, params["denoiser.enc.W"], params["denoiser.enc.b"],
        params["denoiser.dec.W"], params["denoiser.dec.b"], return_cache=True)
    out = {"h_enc": h_enc, "h_dec": h_dec, "v_c": v_c, "v_masker": v_masker,
           "v_denoiser": v_denoiser, "v_twin": None, "h_twin": None}
    caches = {"enc": enc_cache, "dec": dec_cache, "den": den_cache, "twin": None}
    if with_twin and obj.twin_enabled:
        _, W, b = _twin_projection(params, obj)
        v_twin, h_twin, twin_cache = twin_forward(h_enc, v_c, params.group("twin.dec"), W, b,
                                                  return_cache=True)
        out["v_twin"], out["h_twin"] = v_twin, h_twin
        caches["twin"] = twin_cache
    return out, caches


def backward(targets, out, caches, params, obj, n_seq):
    """Analytic gradient of the batch objective for every named parameter."""
    grads = params.zeros_like(np.float64)
    inv = 1.0 / n_seq

    # Denoiser and its input, the Masker output
    d_den = inv * generalized_kl_grad(targets, out["v_denoiser"])
    d_vm, g_den = denoise_backward(d_den, caches["den"], params["denoiser.enc.W"], params["denoiser.dec.W"])
    for key, g in g_den.items():
        grads["denoiser." + key] += g
    grads["denoiser.dec.W"] += 2.0 * obj.lambda2 * params["denoiser.dec.W"]

    d_vm = d_vm + inv * generalized_kl_grad(targets, out["v_masker"])
    h_dec = out["h_dec"]
    d_h_dec, dW, db = sparsify_backward(d_vm * out["v_c"], h_dec, params["masker.fnn.W"], params["masker.fnn.b"])
    grads["masker.fnn.W"] += dW
    grads["masker.fnn.b"] += db
    diag = np.arange(min(params["masker.fnn.W"].shape))
    grads["masker.fnn.W"][diag, diag] += obj.lambda1 * np.sign(params["masker.fnn.W"][diag, diag])

    d_h_enc = np.zeros_like(out["h_enc"])
    if obj.twin_enabled and out["h_twin"] is not None:
        h_twin = out["h_twin"]
        d_hd_reg, d_ht_reg, dWb, dbb = twin_regularization_backward(
            h_dec, h_twin, params["twin.bridge.W"], params["twin.bridge.b"], scale=obj.twin_weight * inv)
        d_h_dec += d_hd_reg
        grads["twin.bridge.W"] += dWb
        grads["twin.bridge.b"] += dbb

        prefix, W_tw, b_tw = _twin_projection(params, obj)
        d_mask_tw = inv * generalized_kl_grad(targets, out["v_twin"]) * out["v_c"]
        d_h_twin, dWt, dbt = sparsify_backward(d_mask_tw, h_twin, W_tw, b_tw)
        grads[prefix + ".W"] += dWt
        grads[prefix + ".b"] += dbt
        if obj.twin_loss_backprop == "full":
            d_h_twin = d_h_twin + d_ht_reg
        d_enc_tw, g_tw = twin_decoder_backward(d_h_twin, caches["twin"])
        for key, g in g_tw.items():
            grads["twin.dec." + key] += g
        d_h_enc += d_enc_tw

    d_enc_dec, g_dec = gru_backward(d_h_dec, caches["dec"])
    for key, g in g_dec.items():
        grads["masker.dec." + key] += g
    d_h_enc += d_enc_dec
    for cell, g_cell in encode_backward(d_h_enc, caches["enc"]).items():
        for key, g in g_cell.items():
            grads[f"masker.{cell}.{key}"] += g
    return grads


def composite_loss(batch, params, mcfg, obj=None, return_grads=False, twin_target=None):
    """Batch objective as a :class:`LossBreakdown`, optionally with gradients.

    ``twin_target`` replaces the twin states inside the twin cost (not inside
    ``L_TW``). Holding it fixed while perturbing parameters gives the function
    whose exact gradient is the ``stop`` routing.
    """
    obj = obj or ObjectiveConfig()
    T_c = mcfg.T - 2 * mcfg.L
    if batch.inputs.shape[1:] != (mcfg.T, mcfg.N) or batch.targets.shape[1:] != (T_c, mcfg.N):
        raise InvalidArgumentError(
            f"batch shapes {batch.inputs.shape}/{batch.targets.shape} do not fit "
            f"T={mcfg.T}, L={mcfg.L}, N={mcfg.N}"
        )
    n_seq = len(batch)
    out, caches = forward(batch.inputs, params, mcfg, obj)
    h_twin = out["h_twin"] if twin_target is None else twin_target
    losses = loss_breakdown(batch.targets, out["v_masker"], out["v_denoiser"], out["v_twin"],
                            out["h_dec"], h_twin, params, obj, n_seq)
    if not return_grads:
        return losses
    return losses, backward(batch.targets, out, caches, params, obj, n_seq)
