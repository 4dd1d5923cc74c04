"""Synthetic test signals used in place of a recorded corpus.

Every generator takes a seed and returns a float64 array normalised to a
peak of 0.95.  The suite is small enough to run all methods at all levels on
one CPU.
"""
from __future__ import annotations

import numpy as np
from scipy import signal as sps

SAMPLE_RATE = 16000
LENGTH = 8192
PEAK = 0.95


def _normalise(x):
    return PEAK * x / np.max(np.abs(x))


def _fade(n, length=256):
    env = np.ones(n)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(length) / length)
    env[:length] = ramp
    env[-length:] = ramp[::-1]
    return env


def sines(rng, n=LENGTH, fs=SAMPLE_RATE):
    """Mixture of five stationary sinusoids with random amplitude and phase."""
    t = np.arange(n) / fs
    freqs = rng.uniform(100, 3000, 5)
    amps = rng.uniform(0.2, 1.0, 5)
    phases = rng.uniform(0, 2 * np.pi, 5)
    return _normalise(sum(a * np.sin(2 * np.pi * f * t + p) for a, f, p in zip(amps, freqs, phases)))


def ar_tones(rng, n=LENGTH, fs=SAMPLE_RATE):
    """Two narrow AR(2) resonances driven by white noise."""
    x = np.zeros(n)
    for f0 in rng.uniform(200, 2500, 2):
        rho = 0.998
        a = [1.0, -2 * rho * np.cos(2 * np.pi * f0 / fs), rho ** 2]
        x += sps.lfilter([1.0], a, rng.standard_normal(n + 1000))[1000:]
    return _normalise(x * _fade(n))


def chirp(rng, n=LENGTH, fs=SAMPLE_RATE):
    """Linear chirp with a slowly varying amplitude."""
    t = np.arange(n) / fs
    f0, f1 = rng.uniform(150, 400), rng.uniform(1500, 3500)
    env = 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(1, 3) * t)
    return _normalise(env * sps.chirp(t, f0, t[-1], f1, phi=rng.uniform(0, 360)))


def noise_bursts(rng, n=LENGTH, fs=SAMPLE_RATE):
    """Band-pass filtered noise gated into Hann-shaped bursts."""
    lo = rng.uniform(300, 800)
    sos = sps.butter(4, [lo, lo * 3], btype="bandpass", fs=fs, output="sos")
    noise = sps.sosfilt(sos, rng.standard_normal(n))
    gate = np.zeros(n)
    longest = min(2048, n // 4)
    for start in np.sort(rng.integers(0, n - longest, 4)):
        length = int(rng.integers(longest * 25 // 64, longest))
        gate[start:start + length] += np.hanning(length)
    return _normalise(noise * np.minimum(gate, 1.0) + 1e-3 * noise)


def harmonic(rng, n=LENGTH, fs=SAMPLE_RATE):
    """Plucked-string-like tone: decaying harmonics of a random fundamental."""
    t = np.arange(n) / fs
    f0 = rng.uniform(110, 330)
    x = np.zeros(n)
    for h in range(1, 9):
        if h * f0 > fs / 2 - 500:
            break
        x += (0.8 ** h) * np.exp(-t * (2 + h)) * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
    return _normalise(x * _fade(n, 64))


GENERATORS = {
    "sines": sines,
    "ar_tones": ar_tones,
    "chirp": chirp,
    "noise_bursts": noise_bursts,
    "harmonic": harmonic,
}


def make_suite(seed=0, n=LENGTH, fs=SAMPLE_RATE):
    """Return ``{name: samples}`` for the five synthetic signals."""
    out = {}
    for i, (name, gen) in enumerate(GENERATORS.items()):
        out[name] = gen(np.random.default_rng([seed, i]), n, fs)
    return out
