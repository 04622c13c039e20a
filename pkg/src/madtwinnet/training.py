"""Optimisation loop: Adam with global-norm clipping, batching, gradient checks, logging."""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .data import make_subsequences, make_training_target
from .exceptions import InvalidArgumentError, NumericError
from .gradcheck import compare_gradients, numeric_gradient
from .masker import MaskerConfig
from .objective import ObjectiveConfig, TrainingBatch, composite_loss, forward
from .params import ModelDims, init_parameters
from .signal import stft

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "L_D", "L_M", "L_TW", "L_twin", "diag_l1", "dec_l2", "total", "grad_norm")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 16
    grad_clip_l2: float = 0.5
    epochs: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.grad_clip_l2 <= 0 or self.batch_size < 1:
            raise InvalidArgumentError("learning_rate, grad_clip_l2 and batch_size must be positive")
        if self.epochs < 0:
            raise InvalidArgumentError("epochs must be non-negative")


class AdamState:
    """First/second moment estimates and the step counter."""

    def __init__(self, params):
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.step = 0

    def tensors(self):
        out = {}
        for name in self.m:
            out["adam.m." + name] = self.m[name]
            out["adam.v." + name] = self.v[name]
        out["adam.step"] = np.array([self.step], dtype=np.float64)
        return out

    @classmethod
    def from_tensors(cls, params, tensors):
        state = cls(params)
        for name in params:
            state.m[name] = np.array(tensors["adam.m." + name], dtype=params[name].dtype)
            state.v[name] = np.array(tensors["adam.v." + name], dtype=params[name].dtype)
        state.step = int(tensors["adam.step"][0])
        return state


def global_norm(grads):
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.values())))


def clip_by_global_norm(grads, max_norm):
    """Rescale all gradients together if their joint l2 norm exceeds ``max_norm``.

    Returns the norm before clipping.
    """
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        for name in grads:
            grads[name] *= scale
    return norm


def adam_update(params, grads, state, cfg):
    """In-place Adam update with bias correction.

    Moments are stored with the dtype of their parameter; arithmetic is
    float64.
    """
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        dtype = params[name].dtype
        state.m[name] = (b1 * state.m[name] + (1.0 - b1) * g).astype(dtype)
        state.v[name] = (b2 * state.v[name] + (1.0 - b2) * g * g).astype(dtype)
        m = state.m[name].astype(np.float64)
        v = state.v[name].astype(np.float64)
        step = cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
        params[name] = (params[name] - step).astype(dtype)


def train_step(batch, params, state, mcfg, obj, cfg):
    """One optimisation step; returns ``(LossBreakdown, grad_norm)``.

    ``params`` and ``state`` are updated in place.
    """
    losses, grads = composite_loss(batch, params, mcfg, obj, return_grads=True)
    bad = [k for k, v in losses.as_dict().items() if not np.isfinite(v)]
    if bad:
        raise NumericError(f"non-finite loss term(s) {', '.join(bad)} at step {state.step + 1}")
    norm = clip_by_global_norm(grads, cfg.grad_clip_l2)
    if not np.isfinite(norm):
        raise NumericError(f"non-finite gradient norm at step {state.step + 1}")
    adam_update(params, grads, state, cfg)
    return losses, norm


def build_examples(tracks, stft_cfg, seq_cfg):
    """Mixture windows and central voice targets from a list of :class:`TrackPair`."""
    inputs, targets = [], []
    for track in tracks:
        mix = np.abs(stft(track.mixture, stft_cfg).data)
        voice = np.abs(stft(track.voice, stft_cfg).data)
        acc = np.abs(stft(track.accompaniment, stft_cfg).data)
        target = make_training_target(voice, [voice, acc]).data
        inputs.append(make_subsequences(mix, seq_cfg).windows)
        targets.append(make_subsequences(target, seq_cfg).central())
    return TrainingBatch(np.concatenate(inputs), np.concatenate(targets))


def iterate_batches(examples, batch_size, rng):
    """Shuffle and split into batches; the last batch may be smaller."""
    order = rng.permutation(len(examples))
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        yield TrainingBatch(examples.inputs[idx], examples.targets[idx])


class Trainer:
    """Runs epochs over a pooled set of subsequences and records every step.

    Parameters are stored in float32 (which keeps checkpoints bit-exact);
    forward and backward passes run in float64.
    """

    def __init__(self, mcfg, obj, cfg, params=None, state=None, dims=None):
        self.mcfg = mcfg
        self.obj = obj
        self.cfg = cfg
        if params is None:
            dims = dims or ModelDims(N=mcfg.N, F=mcfg.F)
            params = init_parameters(cfg.seed, dims, dtype=np.float32)
        self.params = params
        self.state = state or AdamState(params)
        self.rng = np.random.default_rng(cfg.seed)
        self.history = []

    def step(self, batch):
        losses, norm = train_step(batch, self.params, self.state, self.mcfg, self.obj, self.cfg)
        if not self.params.all_finite():
            raise NumericError(f"parameters became non-finite at step {self.state.step}")
        self.history.append((self.state.step, losses, norm))
        return losses

    def run_epoch(self, examples):
        last = None
        for batch in iterate_batches(examples, self.cfg.batch_size, self.rng):
            last = self.step(batch)
        logger.info("epoch done at step %d: total %.6g", self.state.step, last.total if last else float("nan"))
        return last

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for step, losses, norm in self.history:
                d = losses.as_dict()
                writer.writerow([step] + [repr(float(d[c])) for c in LOG_COLUMNS[1:-1]] + [repr(norm)])


def _kink_margin(out, caches, params, obj):
    """Smallest distance of any non-smooth point of the objective from its kink."""
    margins = [np.min(np.abs(caches["den"][1])), np.min(np.abs(caches["den"][3])),
               np.min(np.abs(np.diagonal(params["masker.fnn.W"])))]
    pre = out["h_dec"] @ params["masker.fnn.W"] + params["masker.fnn.b"]
    margins.append(np.min(np.abs(pre)))
    if out["h_twin"] is not None:
        prefix = "masker.fnn" if obj.twin_shares_projection else "twin.fnn"
        pre_tw = out["h_twin"] @ params[prefix + ".W"] + params[prefix + ".b"]
        margins.append(np.min(np.abs(pre_tw)))
    return float(min(margins))


def gradient_check_instance(seed, dims, mcfg, obj, n_seq=2, margin=1e-3, max_draws=50):
    """Draw a random parameter point and batch where the objective is smooth.

    Biases of ReLU layers are drawn slightly positive; a draw is rejected if
    any ReLU pre-activation (or masked diagonal weight) lies within
    ``margin`` of zero, so central differences never straddle a kink.
    """
    rng = np.random.default_rng(seed)
    T_c = mcfg.T - 2 * mcfg.L
    for _ in range(max_draws):
        params = init_parameters(int(rng.integers(2 ** 31)), dims)
        for name in params:
            if name.endswith(".b"):
                params[name] = rng.uniform(0.05, 0.3, params[name].shape)
        batch = TrainingBatch(rng.uniform(0.2, 1.0, (n_seq, mcfg.T, dims.N)),
                              rng.uniform(0.2, 1.0, (n_seq, T_c, dims.N)))
        out, caches = forward(batch.inputs, params, mcfg, obj)
        if _kink_margin(out, caches, params, obj) > margin:
            return params, batch
    raise RuntimeError("could not draw a smooth gradient-check instance")


def gradient_check_full(seed=0, dims=None, mcfg=None, obj=None, step=1e-5, fault=None):
    """Compare analytic gradients of the full objective with central differences.

    With ``stop`` routing the twin states inside the twin cost are held at
    their current value while differencing, which is exactly the function the
    routed gradient differentiates. ``fault`` names a parameter whose
    analytic gradient is deliberately corrupted (for testing the checker).
    """
    dims = dims or ModelDims(N=16, F=8, denoiser_hidden=8)
    mcfg = mcfg or MaskerConfig(N=dims.N, F=dims.F, T=8, L=2)
    obj = obj or ObjectiveConfig()
    params, batch = gradient_check_instance(seed, dims, mcfg, obj)
    _, analytic = composite_loss(batch, params, mcfg, obj, return_grads=True)
    if fault is not None:
        analytic[fault] = analytic[fault] + 1e-2 * (1.0 + np.abs(analytic[fault]))
    twin_target = None
    if obj.twin_enabled and obj.twin_loss_backprop == "stop":
        twin_target = forward(batch.inputs, params, mcfg, obj)[0]["h_twin"].copy()
    names = [n for n in params if obj.twin_enabled or not n.startswith("twin.")]
    numeric = numeric_gradient(
        lambda p: composite_loss(batch, p, mcfg, obj, twin_target=twin_target).total,
        params, names, step)
    return compare_gradients(analytic, numeric)


def loss_row(losses):
    return [losses.as_dict()[c] for c in LOG_COLUMNS[1:-1]]
