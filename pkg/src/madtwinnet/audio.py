"""WAV input/output (16-bit PCM and 32-bit float, mono or stereo)."""
import numpy as np
from scipy.io import wavfile

from .exceptions import InvalidArgumentError

SUBTYPES = ("PCM_16", "FLOAT")


def read_wav(path):
    """Read a WAV file as float64 mono in [-1, 1].

    Multi-channel files are downmixed by averaging the channels.

    Returns
    -------
    samples : np.ndarray
    sample_rate : int
    """
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise InvalidArgumentError(f"unreadable WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise InvalidArgumentError(f"unsupported WAV sample type {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples, int(rate)


def write_wav(path, samples, sample_rate=44100, subtype="FLOAT"):
    """Write mono or (n, channels) samples; values are clipped to [-1, 1]."""
    if subtype not in SUBTYPES:
        raise InvalidArgumentError(f"subtype must be one of {SUBTYPES}")
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    if subtype == "PCM_16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    wavfile.write(path, int(sample_rate), data)
