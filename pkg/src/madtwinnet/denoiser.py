"""Second stage: frame-wise feed-forward autoencoder used as a multiplicative filter."""
import numpy as np

from .divergence import generalized_kl, generalized_kl_grad
from .exceptions import InvalidArgumentError
from .gradcheck import compare_gradients, numeric_gradient


def denoise(v_masked, W_enc, b_enc, W_dec, b_dec, return_cache=False):
    """Refine a masked magnitude estimate.

    ``H_e = relu(v W_enc + b_enc)``, ``H_d = relu(H_e W_dec + b_dec)`` and the
    output is ``H_d * v``. Works on ``(T', N)`` or ``(B, T', N)``.
    """
    v = np.asarray(v_masked, dtype=np.float64)
    if v.shape[-1] != W_enc.shape[0] or W_dec.shape[1] != v.shape[-1]:
        raise InvalidArgumentError(
            f"input has {v.shape[-1]} bins, denoiser expects {W_enc.shape[0]}"
        )
    pre_e = v @ W_enc + b_enc
    h_e = np.maximum(pre_e, 0.0)
    pre_d = h_e @ W_dec + b_dec
    h_d = np.maximum(pre_d, 0.0)
    out = h_d * v
    if return_cache:
        return out, (v, pre_e, h_e, pre_d, h_d)
    return out


def denoise_backward(d_out, cache, W_enc, W_dec):
    """Return ``(dv, grads)`` with grads keyed ``enc.W``, ``enc.b``, ``dec.W``, ``dec.b``."""
    v, pre_e, h_e, pre_d, h_d = cache
    d_pre_d = d_out * v * (pre_d > 0)
    d_h_e = d_pre_d @ W_dec.T
    d_pre_e = d_h_e * (pre_e > 0)
    dv = d_out * h_d + d_pre_e @ W_enc.T

    def flat(a):
        return a.reshape(-1, a.shape[-1])

    grads = {
        "enc.W": flat(v).T @ flat(d_pre_e),
        "enc.b": flat(d_pre_e).sum(axis=0),
        "dec.W": flat(h_e).T @ flat(d_pre_d),
        "dec.b": flat(d_pre_d).sum(axis=0),
    }
    return dv, grads


def denoiser_kl_and_grads(target, v_masked, params):
    """Generalized KL between ``target`` and the Denoiser output, with gradients.

    ``params`` maps ``enc.W``, ``enc.b``, ``dec.W``, ``dec.b``.
    """
    out, cache = denoise(v_masked, params["enc.W"], params["enc.b"], params["dec.W"], params["dec.b"],
                         return_cache=True)
    loss = generalized_kl(target, out)
    _, grads = denoise_backward(generalized_kl_grad(target, out), cache, params["enc.W"], params["dec.W"])
    return loss, grads


def denoiser_gradient_check(seed=0, N=12, hidden=6, frames=3, step=1e-5, margin=1e-3):
    """Max relative error between analytic and central-difference gradients.

    The random instance is redrawn until no ReLU pre-activation lies within
    ``margin`` of zero.
    """
    rng = np.random.default_rng(seed)
    for _ in range(50):
        params = {
            "enc.W": rng.normal(0.0, np.sqrt(2.0 / (N + hidden)), (N, hidden)),
            "enc.b": rng.uniform(0.05, 0.3, hidden),
            "dec.W": rng.normal(0.0, np.sqrt(2.0 / (N + hidden)), (hidden, N)),
            "dec.b": rng.uniform(0.05, 0.3, N),
        }
        v = rng.uniform(0.2, 1.0, (frames, N))
        target = rng.uniform(0.2, 1.0, (frames, N))
        _, (_, pre_e, _, pre_d, _) = denoise(v, params["enc.W"], params["enc.b"], params["dec.W"],
                                             params["dec.b"], return_cache=True)
        if min(np.min(np.abs(pre_e)), np.min(np.abs(pre_d))) > margin:
            break
    _, analytic = denoiser_kl_and_grads(target, v, params)

    def loss(p):
        return generalized_kl(target, denoise(v, p["enc.W"], p["enc.b"], p["dec.W"], p["dec.b"]))

    return compare_gradients(analytic, numeric_gradient(loss, params, step=step)).max_rel_error
