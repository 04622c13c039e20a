"""STFT analysis/synthesis and Griffin-Lim phase reconstruction.

Frames are centered: the signal is padded with ``frame_length // 2`` zeros on
both sides before framing, and ``ceil(len / hop)`` frames are taken. Analysis
and synthesis share one symmetric Hamming window; synthesis divides the
overlap-added signal by the summed squared window, which makes ``istft`` the
least-squares inverse of ``stft``.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class StftConfig:
    frame_length: int = 2049
    fft_length: int = 4096
    hop: int = 384
    sample_rate: int = 44100

    def __post_init__(self):
        for name in ("frame_length", "fft_length", "hop", "sample_rate"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
        if self.frame_length > self.fft_length:
            raise InvalidArgumentError("frame_length must not exceed fft_length")
        if self.frame_length < 2:
            raise InvalidArgumentError("frame_length must be at least 2")
        if self.hop > self.frame_length:
            raise InvalidArgumentError("hop larger than frame_length leaves samples uncovered")

    @property
    def retained_bins(self):
        return self.fft_length // 2 + 1

    @property
    def pad(self):
        return self.frame_length // 2

    def n_frames(self, n_samples):
        return -(-n_samples // self.hop)


@dataclass
class ComplexSpectrogram:
    """Complex STFT, ``data`` shaped (frames, bins)."""

    data: np.ndarray
    config: StftConfig

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[0] < 1:
            raise InvalidArgumentError("spectrogram must be a non-empty 2-D array")
        if self.data.shape[1] != self.config.retained_bins:
            raise InvalidArgumentError(
                f"spectrogram has {self.data.shape[1]} bins, config expects "
                f"{self.config.retained_bins}"
            )

    @property
    def shape(self):
        return self.data.shape

    def magnitude(self):
        return MagnitudeSpectrogram(np.abs(self.data))

    def phase(self):
        return np.angle(self.data)


@dataclass
class MagnitudeSpectrogram:
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InvalidArgumentError("magnitude spectrogram must be 2-D")
        if np.any(self.data < 0):
            raise InvalidArgumentError("magnitude spectrogram entries must be non-negative")

    @property
    def shape(self):
        return self.data.shape


def hamming_window(length):
    """Symmetric Hamming window, ``0.54 - 0.46 cos(2 pi n / (length - 1))``."""
    if int(length) != length or length < 2:
        raise InvalidArgumentError(f"window length must be an integer >= 2, got {length!r}")
    n = np.arange(length, dtype=np.float64)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (length - 1))


def _frame_positions(n_frames, cfg):
    return np.arange(n_frames)[:, None] * cfg.hop + np.arange(cfg.frame_length)[None, :]


def stft(samples, cfg=None):
    """Centered STFT of a mono signal.

    Parameters
    ----------
    samples : array_like, shape (n,)
        Real-valued signal.
    cfg : StftConfig, optional

    Returns
    -------
    ComplexSpectrogram
        ``ceil(n / hop)`` frames by ``fft_length // 2 + 1`` bins.
    """
    cfg = cfg or StftConfig()
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError("stft expects a 1-D signal")
    if x.size == 0:
        raise InvalidArgumentError("cannot analyse an empty signal")
    n_frames = cfg.n_frames(x.size)
    padded_len = (n_frames - 1) * cfg.hop + cfg.frame_length
    padded = np.zeros(padded_len)
    usable = min(x.size, padded_len - cfg.pad)
    padded[cfg.pad:cfg.pad + usable] = x[:usable]
    frames = padded[_frame_positions(n_frames, cfg)] * hamming_window(cfg.frame_length)
    return ComplexSpectrogram(np.fft.rfft(frames, n=cfg.fft_length, axis=1), cfg)


def overlap_add(frames, cfg):
    """Windowed overlap-add of time frames, normalised by the summed squared window.

    Returns the full (still padded) signal of length
    ``(n_frames - 1) * hop + frame_length``.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_frames = frames.shape[0]
    window = hamming_window(cfg.frame_length)
    out_len = (n_frames - 1) * cfg.hop + cfg.frame_length
    signal = np.zeros(out_len)
    norm = np.zeros(out_len)
    positions = _frame_positions(n_frames, cfg)
    np.add.at(signal, positions, frames * window)
    np.add.at(norm, positions, np.broadcast_to(window ** 2, frames.shape))
    return signal / norm


def istft(spec, cfg=None, length=None):
    """Least-squares inverse of :func:`stft`.

    ``length`` defaults to ``frames * hop``, which is within one hop of the
    analysed signal's length.
    """
    if isinstance(spec, ComplexSpectrogram):
        cfg = cfg or spec.config
        data = spec.data
    else:
        data = np.asarray(spec)
    cfg = cfg or StftConfig()
    if data.ndim != 2 or data.shape[1] != cfg.retained_bins:
        raise InvalidArgumentError(
            f"spectrogram shape {data.shape} incompatible with {cfg.retained_bins} bins"
        )
    frames = np.fft.irfft(data, n=cfg.fft_length, axis=1)[:, :cfg.frame_length]
    full = overlap_add(frames, cfg)
    if length is None:
        length = data.shape[0] * cfg.hop
    out = np.zeros(length)
    available = min(length, full.size - cfg.pad)
    out[:available] = full[cfg.pad:cfg.pad + available]
    return out


def inconsistency(signal, target_mag, cfg):
    """Frobenius distance between ``|STFT(signal)|`` and a target magnitude."""
    return float(np.linalg.norm(np.abs(stft(signal, cfg).data) - target_mag))


def griffin_lim(target_mag, init_phase, iterations=10, cfg=None, length=None,
                return_history=False):
    """Griffin-Lim reconstruction starting from a given phase.

    ``iterations=0`` is plain phase borrowing. With ``return_history`` the
    inconsistency after each iteration (starting at iteration 0) is returned
    as well.
    """
    cfg = cfg or StftConfig()
    mag = target_mag.data if isinstance(target_mag, MagnitudeSpectrogram) else np.asarray(target_mag, dtype=np.float64)
    phase = np.asarray(init_phase, dtype=np.float64)
    if mag.shape != phase.shape:
        raise InvalidArgumentError(f"magnitude {mag.shape} and phase {phase.shape} differ in shape")
    if iterations < 0:
        raise InvalidArgumentError("iterations must be non-negative")
    if length is None:
        length = mag.shape[0] * cfg.hop
    x = istft(mag * np.exp(1j * phase), cfg, length=length)
    history = []
    for _ in range(iterations):
        spec = stft(x, cfg).data
        if return_history:
            history.append(float(np.linalg.norm(np.abs(spec) - mag)))
        x = istft(mag * np.exp(1j * np.angle(spec)), cfg, length=length)
    if return_history:
        history.append(inconsistency(x, mag, cfg))
        return x, history
    return x
