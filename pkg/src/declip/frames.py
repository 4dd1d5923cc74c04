"""Parseval tight frames and block processing.

Three transform kinds are supported:

``block-dft``
    Oversampled DFT of a single block: zero-pad to ``channels`` samples and
    apply the unitary FFT.  Coefficients are complex, conjugate-symmetric
    for real input.
``block-dct``
    The same construction with the orthonormal DCT-II; real coefficients.
``gabor``
    Whole-signal discrete Gabor transform (STFT) with the canonical tight
    window for the chosen hop (painless case, ``window_length <= channels``).
    Coefficients form a ``channels x n_frames`` grid.

All pairs satisfy ``D A = Id`` and ``||A x|| = ||x||``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import scipy.fft as sfft

from .signal import ClipMask, FeasibleSet, project_gamma

KINDS = ("block-dft", "block-dct", "gabor")
WINDOWS = ("hann", "sine", "rectangular")


class FrameError(ValueError):
    pass


def make_window(name, length):
    """Periodic window of the given name (never identically zero)."""
    n = np.arange(length)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * n / length)
    if name == "sine":
        return np.sin(np.pi * (n + 0.5) / length)
    if name == "rectangular":
        return np.ones(length)
    raise FrameError(f"unknown window {name!r}")


@dataclass(frozen=True)
class TransformSpec:
    kind: str = "gabor"
    window: str = "hann"
    window_length: int = 1024
    hop: int = 256
    channels: int = 2048
    canonical_tight: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FrameError(f"unknown transform kind {self.kind!r}")
        if self.window not in WINDOWS:
            raise FrameError(f"unknown window {self.window!r}")
        if self.hop < 1 or self.hop > self.window_length:
            raise FrameError("hop must be in [1, window_length]")
        if self.channels < self.window_length:
            raise FrameError("channels must be >= window_length")

    @property
    def redundancy(self):
        if self.kind == "gabor":
            return self.channels / self.hop
        return self.channels / self.window_length

    @property
    def conjugate_pairs(self):
        return self.kind != "block-dct"

    def assemble(self, length=None):
        """Return the frame operator acting on signals of ``length`` samples."""
        if self.kind == "gabor":
            if length is None:
                raise FrameError("gabor frames need the signal length")
            return GaborFrame(self, int(length))
        if length is not None and length != self.window_length:
            raise FrameError(f"block transform expects {self.window_length} samples, got {length}")
        return BlockFrame(self)


#: Evaluation-grade Gabor setting and its desk-scale reduction.
PAPER_GABOR = TransformSpec("gabor", "hann", 8192, 2048, 16384)
DESK_GABOR = TransformSpec("gabor", "hann", 1024, 256, 2048)


class Frame:
    """Common bookkeeping: operation counters and the tightness flag."""

    spec: TransformSpec
    length: int

    def __init__(self):
        self.n_analysis = 0
        self.n_synthesis = 0

    @property
    def is_parseval(self):
        return self.spec.canonical_tight

    def reset_counters(self):
        self.n_analysis = 0
        self.n_synthesis = 0

    def adjoint(self, z):
        """Real adjoint of the analysis map, defined for any coefficients."""
        return self.synthesize(z, strict=False)

    @staticmethod
    def _real(x, strict=True, tol=1e-12):
        if not np.iscomplexobj(x):
            return x
        if not strict:
            return np.ascontiguousarray(x.real)
        scale = max(1.0, float(np.max(np.abs(x.real), initial=0.0)))
        resid = float(np.max(np.abs(x.imag), initial=0.0))
        if resid > tol * scale:
            raise FrameError(
                f"synthesis has imaginary residue {resid:.3e}; coefficients are not conjugate-symmetric"
            )
        return np.ascontiguousarray(x.real)


def _fft_real(x, n, axis=-1):
    """Unitary FFT of real data, computed with rfft and mirrored."""
    h = sfft.rfft(x, n=n, axis=axis, norm="ortho")
    h = np.moveaxis(h, axis, -1)
    nh = h.shape[-1]
    full = np.empty(h.shape[:-1] + (n,), dtype=complex)
    full[..., :nh] = h
    full[..., nh:] = np.conj(h[..., 1 : n - nh + 1][..., ::-1])
    return np.moveaxis(full, -1, axis)


def _ifft_real(z, axis=-1, tol=1e-12):
    """Inverse unitary FFT of conjugate-symmetric data (checked), real output."""
    zz = np.moveaxis(z, axis, -1)
    n = zz.shape[-1]
    scale = max(1.0, float(np.max(np.abs(zz), initial=0.0)))
    asym = max(
        float(np.max(np.abs(zz[..., 1:] - np.conj(zz[..., :0:-1])), initial=0.0)),
        float(np.max(np.abs(zz[..., 0].imag), initial=0.0)),
    )
    if asym > tol * scale:
        raise FrameError(
            f"synthesis has imaginary residue {asym:.3e}; coefficients are not conjugate-symmetric"
        )
    return sfft.irfft(z, n=n, axis=axis, norm="ortho")


class BlockFrame(Frame):
    """Oversampled unitary DFT/DCT of one block (or a stack of blocks)."""

    def __init__(self, spec):
        super().__init__()
        self.spec = spec
        self.length = spec.window_length
        self.n_coef = spec.channels

    def analyze(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.length:
            raise FrameError(f"expected blocks of {self.length} samples, got {x.shape[-1]}")
        self.n_analysis += 1
        P = self.n_coef
        if self.spec.kind == "block-dft":
            return _fft_real(x, P)
        return sfft.dct(x, type=2, n=P, axis=-1, norm="ortho")

    def synthesize(self, z, strict=True):
        z = np.asarray(z)
        if z.shape[-1] != self.n_coef:
            raise FrameError(f"expected {self.n_coef} coefficients, got {z.shape[-1]}")
        self.n_synthesis += 1
        if self.spec.kind == "block-dft":
            if strict:
                return _ifft_real(z)[..., : self.length]
            return sfft.ifft(z, axis=-1, norm="ortho")[..., : self.length].real
        return sfft.idct(z, type=2, axis=-1, norm="ortho")[..., : self.length]

    def atoms(self):
        """Synthesis matrix D (length x channels), built column by column."""
        eye = np.eye(self.n_coef)
        if self.spec.kind == "block-dct":
            return sfft.idct(eye, type=2, axis=0, norm="ortho")[: self.length]
        return sfft.ifft(eye, axis=0, norm="ortho")[: self.length]


class GaborFrame(Frame):
    """Painless tight Gabor frame on R^length (zero padding done internally)."""

    def __init__(self, spec, length):
        super().__init__()
        if length < 1:
            raise FrameError("signal length must be positive")
        self.spec = spec
        self.length = length
        a, Lw = spec.hop, spec.window_length
        self.padded_length = a * math.ceil((length + Lw - a) / a)
        self.n_frames = self.padded_length // a
        self.n_coef = spec.channels * self.n_frames
        starts = np.arange(self.n_frames) * a - (Lw - a)
        self._index = (starts[:, None] + np.arange(Lw)[None, :]) % self.padded_length

    @cached_property
    def window(self):
        g = make_window(self.spec.window, self.spec.window_length)
        if not self.spec.canonical_tight:
            return g
        a = self.spec.hop
        Lw = self.spec.window_length
        # Periodised energy sum_k g(j + k a)^2; tight iff it is identically 1.
        pad = (-Lw) % a
        s = np.sum(np.concatenate([g, np.zeros(pad)]).reshape(-1, a) ** 2, axis=0)
        if np.any(s <= 0):
            raise FrameError("window/hop pair leaves samples uncovered")
        return g / np.sqrt(np.tile(s, (Lw + pad) // a)[:Lw])

    @property
    def shape(self):
        return (self.spec.channels, self.n_frames)

    def analyze(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.length,):
            raise FrameError(f"expected a signal of {self.length} samples, got {x.shape}")
        self.n_analysis += 1
        xp = np.zeros(self.padded_length)
        xp[: self.length] = x
        seg = xp[self._index] * self.window
        c = _fft_real(seg.T, self.spec.channels, axis=0)
        return c

    def synthesize(self, z, strict=True):
        z = np.asarray(z)
        if z.shape != self.shape:
            raise FrameError(f"expected a {self.shape} coefficient grid, got {z.shape}")
        self.n_synthesis += 1
        Lw = self.spec.window_length
        if strict:
            seg = _ifft_real(z, axis=0)[:Lw].T
        else:
            seg = sfft.ifft(z, axis=0, norm="ortho")[:Lw].real.T
        seg = seg * self.window
        out = np.bincount(self._index.ravel(), weights=seg.ravel(), minlength=self.padded_length)
        return out[: self.length]


def analyze(x, spec):
    x = np.asarray(x, dtype=np.float64)
    return spec.assemble(x.shape[-1] if spec.kind == "gabor" else None).analyze(x)


def synthesize(z, spec, length=None):
    return spec.assemble(length).synthesize(z)


def project_gamma_star(z, fs, y, frame):
    """Projection onto {z : D z in Gamma} for a Parseval frame.

    ``z - A (D z - proj_Gamma(D z))``; only valid when D D* = Id.
    """
    if not frame.is_parseval:
        raise FrameError("closed-form projection onto Gamma* requires a Parseval frame")
    x = frame.synthesize(z)
    return z - frame.analyze(x - project_gamma(x, fs, y))


# --------------------------------------------------------------------------
# block partitioning

@dataclass(frozen=True)
class BlockPlan:
    """Overlapping blocks with weight-compensated overlap-add.

    The signal is zero-padded by ``block_length - hop`` samples in front and
    enough at the back so every sample is covered by the same number of
    blocks.  With ``analysis_window=False`` blocks are raw segments and the
    synthesis weights are ``w / sum(w)``; with ``analysis_window=True`` blocks
    are ``w * segment`` and reassembly uses ``w / sum(w^2)``.
    """

    block_length: int = 1024
    hop: int = 256
    window: str = "hann"
    analysis_window: bool = False

    def __post_init__(self):
        if self.block_length < 1 or not 1 <= self.hop <= self.block_length:
            raise FrameError("inconsistent block plan: need 1 <= hop <= block_length")
        if self.window not in WINDOWS:
            raise FrameError(f"unknown window {self.window!r}")

    @property
    def overlap(self):
        return 1.0 - self.hop / self.block_length

    @property
    def front_pad(self):
        return self.block_length - self.hop

    def n_blocks(self, n):
        return max(1, math.ceil((n + self.block_length - self.hop) / self.hop))

    def padded_length(self, n):
        return (self.n_blocks(n) - 1) * self.hop + self.block_length

    def index(self, n):
        T = self.n_blocks(n)
        return np.arange(T)[:, None] * self.hop + np.arange(self.block_length)[None, :]

    @cached_property
    def weights(self):
        return make_window(self.window, self.block_length)

    def _pad(self, x, fill=0):
        x = np.asarray(x)
        n = x.shape[0]
        out = np.full(self.padded_length(n), fill, dtype=x.dtype)
        out[self.front_pad : self.front_pad + n] = x
        return out

    def split_mask(self, mask):
        """Per-block masks; padding samples are reliable (with value 0)."""
        n = mask.reliable.size
        idx = self.index(n)
        return ClipMask(
            self._pad(mask.reliable, True)[idx],
            self._pad(mask.high, False)[idx],
            self._pad(mask.low, False)[idx],
            mask.theta_c,
        )

    def coverage(self, n):
        """Sum of OLA normalisation weights seen by every original sample."""
        w = self.weights ** 2 if self.analysis_window else self.weights
        idx = self.index(n)
        s = np.bincount(idx.ravel(), weights=np.broadcast_to(w, idx.shape).ravel(),
                        minlength=self.padded_length(n))
        return s[self.front_pad : self.front_pad + n]


def split_blocks(x, plan):
    """Cut ``x`` into a (n_blocks, block_length) array."""
    x = np.asarray(x, dtype=np.float64)
    blocks = plan._pad(x)[plan.index(x.size)]
    if plan.analysis_window:
        blocks = blocks * plan.weights
    return blocks


def overlap_add(blocks, plan, n):
    """Reassemble ``n`` samples from processed blocks."""
    blocks = np.asarray(blocks, dtype=np.float64)
    idx = plan.index(n)
    if blocks.shape != idx.shape:
        raise FrameError(f"expected blocks of shape {idx.shape}, got {blocks.shape}")
    s = plan.coverage(n)
    if np.any(s <= 1e-12):
        raise FrameError("inconsistent plan: some samples receive no synthesis weight")
    acc = np.bincount(idx.ravel(), weights=(blocks * plan.weights).ravel(),
                      minlength=plan.padded_length(n))
    return acc[plan.front_pad : plan.front_pad + n] / s

