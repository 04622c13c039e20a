"""Mask oracles, training targets, subsequence batching and synthetic tracks."""
import os
from dataclasses import dataclass

import numpy as np

from .audio import read_wav, write_wav
from .exceptions import DatasetLayoutError, InvalidArgumentError
from .signal import MagnitudeSpectrogram

EPS = 1e-6
STEMS = ("mixture", "vocals", "accompaniment")


@dataclass(frozen=True)
class SequenceConfig:
    """Subsequence length ``T`` and context margin ``L`` (frames)."""

    T: int = 60
    L: int = 10

    def __post_init__(self):
        if self.L < 0 or self.T <= 2 * self.L:
            raise InvalidArgumentError(f"need T > 2L >= 0, got T={self.T}, L={self.L}")

    @property
    def central(self):
        return self.T - 2 * self.L

    def n_windows(self, n_frames):
        return -(-n_frames // self.central)


@dataclass
class SubsequenceBatch:
    windows: np.ndarray
    source_frames: int
    config: SequenceConfig

    def __len__(self):
        return self.windows.shape[0]

    def central(self):
        """Central ``T - 2L`` frames of every window."""
        L = self.config.L
        return self.windows[:, L:self.config.T - L]


@dataclass
class TrackPair:
    mixture: np.ndarray
    voice: np.ndarray
    accompaniment: np.ndarray
    sample_rate: int = 44100

    def __post_init__(self):
        if not (len(self.mixture) == len(self.voice) == len(self.accompaniment)):
            raise InvalidArgumentError("mixture and stems must have equal lengths")


def _data(mag):
    return mag.data if isinstance(mag, MagnitudeSpectrogram) else np.asarray(mag, dtype=np.float64)


def ideal_ratio_mask(source_mags, j):
    """Ratio of source ``j`` to the sum of all source magnitudes, in [0, 1]."""
    mags = [_data(m) for m in source_mags]
    if not mags:
        raise InvalidArgumentError("need at least one source")
    if any(m.shape != mags[0].shape for m in mags):
        raise InvalidArgumentError("source magnitudes differ in shape")
    total = np.sum(mags, axis=0)
    return mags[j] / np.maximum(total, EPS)


def ideal_amplitude_mask(source_mag, mixture_mag):
    """Ratio of a source magnitude to the mixture magnitude; unbounded above."""
    s, x = _data(source_mag), _data(mixture_mag)
    if s.shape != x.shape:
        raise InvalidArgumentError("source and mixture magnitudes differ in shape")
    return s / np.maximum(x, EPS)


def make_training_target(voice_mag, all_source_mags):
    """Voice target: twice the voice IRM applied to the summed source magnitudes.

    ``all_source_mags`` lists every source, the voice included.
    """
    voice = _data(voice_mag)
    mags = [_data(m) for m in all_source_mags]
    if not mags or any(m.shape != voice.shape for m in mags):
        raise InvalidArgumentError("source magnitudes differ in shape")
    mixture = np.sum(mags, axis=0)
    mask = voice / np.maximum(mixture, EPS)
    return MagnitudeSpectrogram(2.0 * mask * mixture)


def make_subsequences(mag, cfg=None):
    """Cut a (frames, bins) magnitude into overlapping ``T``-frame windows.

    Window ``b`` starts at frame ``b * (T - 2L) - L``; the frame axis is
    zero-padded so that every central block is full.
    """
    cfg = cfg or SequenceConfig()
    v = _data(mag)
    if v.ndim != 2 or v.shape[0] < 1:
        raise InvalidArgumentError("expected a (frames, bins) array with at least one frame")
    n_frames, n_bins = v.shape
    B = cfg.n_windows(n_frames)
    padded = np.zeros(((B - 1) * cfg.central + cfg.T, n_bins))
    padded[cfg.L:cfg.L + n_frames] = v
    starts = np.arange(B) * cfg.central
    windows = padded[starts[:, None] + np.arange(cfg.T)[None, :]]
    return SubsequenceBatch(windows, n_frames, cfg)


def overlap_reconstruct(outputs, source_frames):
    """Concatenate the central blocks ``(B, T', N)`` and truncate to ``source_frames``."""
    out = np.asarray(outputs, dtype=np.float64)
    if out.ndim != 3:
        raise InvalidArgumentError("outputs must be shaped (B, T', N)")
    B, Tc, N = out.shape
    if source_frames > B * Tc:
        raise InvalidArgumentError(f"{source_frames} frames requested but only {B * Tc} available")
    return MagnitudeSpectrogram(out.reshape(B * Tc, N)[:source_frames])


def synth_fixture(seed, duration_s, sample_rate=44100):
    """Deterministic synthetic voice/accompaniment pair.

    The voice is a harmonic tone with vibrato and a slowly moving melody; the
    accompaniment is a sequence of chords over low-passed noise. The mixture is
    the exact sum, and all three are scaled so the mixture peaks at 0.8.
    """
    if duration_s <= 0:
        raise InvalidArgumentError("duration must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate

    # voice: melody of notes, each 0.25-0.5 s, with 5.5 Hz vibrato
    voice = np.zeros(n)
    pos = 0
    while pos < n:
        note_len = int(sample_rate * rng.uniform(0.25, 0.5))
        stop = min(n, pos + note_len)
        f0 = 220.0 * 2 ** (rng.integers(0, 12) / 12.0)
        seg_t = t[pos:stop] - t[pos]
        phase = 2 * np.pi * f0 * seg_t + (f0 * 0.02 / 5.5) * np.sin(2 * np.pi * 5.5 * seg_t)
        env = np.minimum(1.0, np.minimum(seg_t, seg_t[-1] - seg_t) / 0.02 + 1e-3)
        tone = sum(np.sin(k * phase) / k for k in range(1, 7))
        voice[pos:stop] = env * tone
        pos = stop

    # accompaniment: triads lasting 1 s plus low-passed noise
    acc = np.zeros(n)
    chord_len = sample_rate
    for start in range(0, n, chord_len):
        stop = min(n, start + chord_len)
        root = 110.0 * 2 ** (rng.integers(0, 12) / 12.0)
        seg_t = t[start:stop]
        for ratio in (1.0, 2 ** (4 / 12), 2 ** (7 / 12)):
            acc[start:stop] += 0.4 * np.sin(2 * np.pi * root * ratio * seg_t + rng.uniform(0, 2 * np.pi))
    noise = rng.standard_normal(n)
    kernel = np.ones(32) / 32.0
    acc += 0.3 * np.convolve(noise, kernel, mode="same")

    mixture = voice + acc
    scale = 0.8 / max(np.max(np.abs(mixture)), 1e-12)
    voice, acc = voice * scale, acc * scale
    return TrackPair(voice + acc, voice, acc, sample_rate)


def write_track(root, name, track, subtype="FLOAT"):
    """Write a track as ``<root>/<name>/{mixture,vocals,accompaniment}.wav``."""
    folder = os.path.join(root, name)
    os.makedirs(folder, exist_ok=True)
    for stem, samples in zip(STEMS, (track.mixture, track.voice, track.accompaniment)):
        write_wav(os.path.join(folder, f"{stem}.wav"), samples, track.sample_rate, subtype)
    return folder


def list_tracks(root, stems=STEMS):
    """Track folder names under ``root``; every one must hold all ``stems``."""
    if not os.path.isdir(root):
        raise DatasetLayoutError(f"dataset root {root} is not a directory")
    names = sorted(d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d)))
    if not names:
        raise DatasetLayoutError(f"no track folders in {root}")
    for name in names:
        for stem in stems:
            if not os.path.isfile(os.path.join(root, name, f"{stem}.wav")):
                raise DatasetLayoutError(f"track {name} is missing {stem}.wav")
    return names


def load_track(root, name):
    stems = [read_wav(os.path.join(root, name, f"{stem}.wav")) for stem in STEMS]
    rate = stems[0][1]
    lengths = {len(s) for s, _ in stems}
    if len(lengths) != 1:
        raise DatasetLayoutError(f"stems of track {name} differ in length")
    return TrackPair(stems[0][0], stems[1][0], stems[2][0], rate)


def load_dataset(root):
    return [load_track(root, name) for name in list_tracks(root)]
