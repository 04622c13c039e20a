"""Inference path: waveform in, separated voice waveform out.

Only Masker and Denoiser parameters are read here; twin tensors may be
present in ``params`` but are never touched.
"""
import numpy as np

from .data import make_subsequences, overlap_reconstruct
from .denoiser import denoise
from .masker import masker_forward
from .signal import MagnitudeSpectrogram, griffin_lim, stft


def estimate_voice_magnitude(mix_mag, params, mcfg, seq_cfg, batch_size=64):
    """Voice magnitude estimate ``(frames, N)`` for a mixture magnitude."""
    windows = make_subsequences(mix_mag, seq_cfg)
    outputs = []
    for start in range(0, len(windows), batch_size):
        chunk = windows.windows[start:start + batch_size]
        v_masked, _ = masker_forward(chunk, params, mcfg)
        outputs.append(denoise(v_masked, params["denoiser.enc.W"], params["denoiser.enc.b"],
                               params["denoiser.dec.W"], params["denoiser.dec.b"]))
    return overlap_reconstruct(np.concatenate(outputs), windows.source_frames)


def separate(mixture, params, stft_cfg, seq_cfg, mcfg, gla_iterations=10):
    """Separate the singing voice from a mono mixture signal.

    The Griffin-Lim iterations start from the mixture phase; the result has
    the same length as ``mixture``.
    """
    mixture = np.asarray(mixture, dtype=np.float64)
    spec = stft(mixture, stft_cfg)
    voice_mag = estimate_voice_magnitude(np.abs(spec.data), params, mcfg, seq_cfg)
    return griffin_lim(MagnitudeSpectrogram(voice_mag.data), spec.phase(), gla_iterations,
                       stft_cfg, length=mixture.size)
