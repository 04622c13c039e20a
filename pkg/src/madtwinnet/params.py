"""Named parameter storage and initialisation."""
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

GRU_CELLS = ("masker.enc_fwd", "masker.enc_bwd", "masker.dec", "twin.dec")


@dataclass(frozen=True)
class ModelDims:
    """Network widths: ``N`` bins, ``F`` trimmed bins, denoiser bottleneck."""

    N: int = 2049
    F: int = 744
    denoiser_hidden: int = None

    def __post_init__(self):
        if not 0 < self.F <= self.N:
            raise InvalidArgumentError(f"need 0 < F <= N, got F={self.F}, N={self.N}")
        if self.denoiser_hidden is None:
            object.__setattr__(self, "denoiser_hidden", self.N // 2)
        if self.denoiser_hidden < 1:
            raise InvalidArgumentError("denoiser bottleneck must be at least 1")

    def shapes(self):
        N, F, Nh = self.N, self.F, self.denoiser_hidden
        shapes = OrderedDict()
        for cell, n_in in zip(GRU_CELLS, (F, F, 2 * F, 2 * F)):
            shapes[f"{cell}.W"] = (n_in, 3 * F)
            shapes[f"{cell}.U"] = (F, 3 * F)
            shapes[f"{cell}.b"] = (3 * F,)
        shapes["masker.fnn.W"] = (F, N)
        shapes["masker.fnn.b"] = (N,)
        shapes["twin.fnn.W"] = (F, N)
        shapes["twin.fnn.b"] = (N,)
        shapes["twin.bridge.W"] = (F, F)
        shapes["twin.bridge.b"] = (F,)
        shapes["denoiser.enc.W"] = (N, Nh)
        shapes["denoiser.enc.b"] = (Nh,)
        shapes["denoiser.dec.W"] = (Nh, N)
        shapes["denoiser.dec.b"] = (N,)
        # keep groups contiguous: masker, twin, denoiser
        order = sorted(shapes, key=lambda k: ("masker", "twin", "denoiser").index(k.split(".")[0]))
        return OrderedDict((k, shapes[k]) for k in order)


class ParameterSet(OrderedDict):
    """Ordered mapping from dotted names to arrays.

    ``params.group("masker.dec")`` returns ``{"W": ..., "U": ..., "b": ...}``
    views into the same arrays.
    """

    def group(self, prefix):
        prefix = prefix + "."
        return {k[len(prefix):]: v for k, v in self.items() if k.startswith(prefix)}

    def copy(self):
        return ParameterSet((k, v.copy()) for k, v in self.items())

    def astype(self, dtype):
        return ParameterSet((k, v.astype(dtype)) for k, v in self.items())

    def zeros_like(self, dtype=None):
        return ParameterSet((k, np.zeros_like(v, dtype=dtype)) for k, v in self.items())

    def n_values(self):
        return sum(v.size for v in self.values())

    def all_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.values())


def orthogonal(rng, n):
    """Random ``n x n`` orthogonal matrix (QR of a Gaussian, sign-corrected)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def glorot_normal(rng, fan_in, fan_out):
    return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))


def init_parameters(seed, dims, dtype=np.float64):
    """Initialise every tensor deterministically from ``seed``.

    Recurrent matrices are orthogonal per gate, every other weight matrix is
    Glorot-scaled normal (per gate for GRU input weights), biases are zero.
    """
    rng = np.random.default_rng(seed)
    F = dims.F
    params = ParameterSet()
    for name, shape in dims.shapes().items():
        kind = name.rsplit(".", 1)[1]
        if kind == "b":
            value = np.zeros(shape)
        elif kind == "U":
            value = np.concatenate([orthogonal(rng, F) for _ in range(3)], axis=1)
        elif name.rsplit(".", 1)[0] in GRU_CELLS:
            value = np.concatenate([glorot_normal(rng, shape[0], F) for _ in range(3)], axis=1)
        else:
            value = glorot_normal(rng, *shape)
        params[name] = value.astype(dtype)
    return params
