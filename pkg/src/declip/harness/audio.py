"""WAV input/output through ``scipy.io.wavfile``."""
from __future__ import annotations

import struct
import warnings

import numpy as np
from scipy.io import wavfile

from ..signal import Signal


class AudioFormatError(ValueError):
    """Malformed or unsupported WAV file."""


def _to_float(data):
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        # 24-bit PCM is returned left-justified in int32, so one scale fits both
        return data.astype(np.float64) / 2147483648.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise AudioFormatError(f"unsupported sample type {data.dtype}")


def load_audio(path):
    """Read a mono (or downmixed) WAV file as float64 samples in [-1, 1]."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError, OSError, struct.error) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise AudioFormatError(f"{path}: cannot parse WAV ({exc})") from exc
    x = _to_float(np.asarray(data))
    if x.ndim == 2:
        if x.shape[1] > 1:
            warnings.warn(f"{path}: {x.shape[1]} channels downmixed to mono by averaging")
        x = x.mean(axis=1)
    if x.size == 0:
        raise AudioFormatError(f"{path}: no samples")
    return Signal(x, rate)


def save_audio(path, samples, sample_rate):
    """Write 32-bit float mono WAV."""
    wavfile.write(path, int(sample_rate), np.asarray(samples, dtype=np.float32))
