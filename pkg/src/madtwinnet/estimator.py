"""scikit-learn compatible wrapper around training and separation."""
from dataclasses import asdict, fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import checkpoint as ckpt
from .config import RunConfig, save_config
from .data import TrackPair
from .evaluation import aggregate, score
from .exceptions import InvalidArgumentError
from .pipeline import separate
from .training import AdamState, Trainer, build_examples, iterate_batches

_CONFIG_KEYS = [f.name for f in fields(RunConfig) if f.name not in ("schema_version", "seed", "sample_rate")]


def check_signals(X, name="X"):
    """Validate a signal or a sequence of 1-D signals; returns a list of float64 arrays."""
    if isinstance(X, np.ndarray) and X.ndim == 1:
        X = [X]
    signals = []
    for i, x in enumerate(X):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise InvalidArgumentError(f"{name}[{i}] must be a non-empty 1-D signal")
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError(f"{name}[{i}] contains non-finite samples")
        signals.append(x)
    if not signals:
        raise InvalidArgumentError(f"{name} is empty")
    return signals


def check_paired(X, y, name_y="y"):
    if len(X) != len(y):
        raise InvalidArgumentError(f"X has {len(X)} signals but {name_y} has {len(y)}")
    for i, (a, b) in enumerate(zip(X, y)):
        if a.size != b.size:
            raise InvalidArgumentError(f"signal {i}: mixture and {name_y} lengths differ")


class MaDTwinNet(TransformerMixin, BaseEstimator):
    """Masker/Denoiser singing-voice separator with TwinNet regularisation.

    ``fit`` takes mixtures and the matching voice signals (accompaniment
    defaults to ``mixture - voice``). ``predict``/``transform`` return the
    separated voice for each mixture. Constructor arguments mirror the keys of
    :class:`~madtwinnet.config.RunConfig`; ``max_steps`` optionally stops
    training early, ``random_state`` seeds initialisation and shuffling.
    """

    def __init__(self, frame_length=511, fft_length=512, hop=128, T=30, L=5, F=93,
                 denoiser_hidden=0, encoder_alignment="realigned", lambda1=1e-2, lambda2=1e-4,
                 twin_enabled=True, twin_weight=0.5, twin_loss_backprop="stop",
                 twin_shares_projection=False, learning_rate=1e-4, batch_size=16,
                 grad_clip_l2=0.5, epochs=10, max_steps=None, griffin_lim_iterations=10,
                 sample_rate=44100, random_state=0):
        self.frame_length = frame_length
        self.fft_length = fft_length
        self.hop = hop
        self.T = T
        self.L = L
        self.F = F
        self.denoiser_hidden = denoiser_hidden
        self.encoder_alignment = encoder_alignment
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.twin_enabled = twin_enabled
        self.twin_weight = twin_weight
        self.twin_loss_backprop = twin_loss_backprop
        self.twin_shares_projection = twin_shares_projection
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.grad_clip_l2 = grad_clip_l2
        self.epochs = epochs
        self.max_steps = max_steps
        self.griffin_lim_iterations = griffin_lim_iterations
        self.sample_rate = sample_rate
        self.random_state = random_state

    def run_config(self):
        values = {k: getattr(self, k) for k in _CONFIG_KEYS}
        return RunConfig(seed=self.random_state, sample_rate=self.sample_rate, **values).validate()

    def fit(self, X, y, accompaniment=None):
        X = check_signals(X)
        y = check_signals(y, "y")
        check_paired(X, y)
        if accompaniment is None:
            accompaniment = [x - v for x, v in zip(X, y)]
        accompaniment = check_signals(accompaniment, "accompaniment")
        check_paired(X, accompaniment, "accompaniment")
        cfg = self.run_config()
        tracks = [TrackPair(x, v, a, self.sample_rate) for x, v, a in zip(X, y, accompaniment)]
        examples = build_examples(tracks, cfg.stft, cfg.sequence)
        trainer = Trainer(cfg.masker, cfg.objective, cfg.training, dims=cfg.dims)
        limit = self.max_steps if self.max_steps is not None else float("inf")
        for _ in range(cfg.epochs if self.max_steps is None else 10 ** 9):
            if trainer.state.step >= limit:
                break
            for batch in iterate_batches(examples, cfg.batch_size, trainer.rng):
                trainer.step(batch)
                if trainer.state.step >= limit:
                    break
        self.config_ = cfg
        self.params_ = trainer.params
        self.optimizer_state_ = trainer.state
        self.history_ = [(step, losses.as_dict(), norm) for step, losses, norm in trainer.history]
        self.n_steps_ = trainer.state.step
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        cfg = self.config_
        return [separate(x, self.params_, cfg.stft, cfg.sequence, cfg.masker, cfg.griffin_lim_iterations)
                for x in check_signals(X)]

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y, accompaniment=None):
        """Median SDR (dB) of the separated voices."""
        X = check_signals(X)
        y = check_signals(y, "y")
        check_paired(X, y)
        if accompaniment is None:
            accompaniment = [x - v for x, v in zip(X, y)]
        per_track = [(str(i),) + score(est, v, a)
                     for i, (est, v, a) in enumerate(zip(self.predict(X), y, accompaniment))]
        return aggregate(per_track).median_sdr

    def save(self, path, config_path=None):
        check_is_fitted(self, "params_")
        ckpt.save_checkpoint(path, self.params_, self.optimizer_state_)
        if config_path is not None:
            save_config(config_path, self.config_)

    @classmethod
    def from_checkpoint(cls, path, config):
        """Rebuild a fitted estimator from a checkpoint and its :class:`RunConfig`."""
        values = asdict(config)
        seed = values.pop("seed")
        values.pop("schema_version")
        est = cls(random_state=seed, **values)
        params, opt = ckpt.load_checkpoint(path)
        est.config_ = est.run_config()
        est.params_ = params
        est.optimizer_state_ = AdamState.from_tensors(params, opt) if opt else AdamState(params)
        est.history_ = []
        est.n_steps_ = est.optimizer_state_.step
        return est
