"""Hard-clipping model, feasible sets and SDR metrics.

Signals are plain 1-D float64 numpy arrays.  Indices are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np

#: Value reported in place of +inf SDR (keeps reports serializable).
SDR_CAP = 300.0


class ClippingError(ValueError):
    """Raised for invalid clipping inputs or undefined metrics."""


@dataclass(frozen=True)
class Signal:
    """A mono waveform with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ClippingError("signal must be a non-empty 1-D array")
        if not np.all(np.isfinite(x)):
            raise ClippingError("signal contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ClippingError("sample rate must be positive")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class ClipMask:
    """Partition of sample indices into reliable / clipped-high / clipped-low.

    The three boolean arrays have equal shape and are pairwise disjoint with a
    union covering every index.  Arrays may be 2-D (one row per block).
    """

    reliable: np.ndarray
    high: np.ndarray
    low: np.ndarray
    theta_c: float

    def __post_init__(self):
        r = np.asarray(self.reliable, dtype=bool)
        h = np.asarray(self.high, dtype=bool)
        lo = np.asarray(self.low, dtype=bool)
        if not (r.shape == h.shape == lo.shape):
            raise ClippingError("mask arrays differ in shape")
        if np.any(r & h) or np.any(r & lo) or np.any(h & lo):
            raise ClippingError("mask sets overlap")
        if not np.all(r | h | lo):
            raise ClippingError("mask sets do not cover every index")
        if not self.theta_c > 0:
            raise ClippingError("theta_c must be positive")
        object.__setattr__(self, "reliable", r)
        object.__setattr__(self, "high", h)
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "theta_c", float(self.theta_c))

    @classmethod
    def from_clipped(cls, y, theta_c):
        """Rebuild the mask of an already clipped observation."""
        y = np.asarray(y, dtype=np.float64)
        return cls(np.abs(y) < theta_c, y >= theta_c, y <= -theta_c, theta_c)

    @property
    def clipped(self):
        return self.high | self.low

    @property
    def reliable_idx(self):
        return np.flatnonzero(self.reliable)

    @property
    def high_idx(self):
        return np.flatnonzero(self.high)

    @property
    def low_idx(self):
        return np.flatnonzero(self.low)

    @property
    def n_clipped(self):
        return int(np.count_nonzero(self.high) + np.count_nonzero(self.low))

    def percent_clipped(self):
        return 100.0 * self.n_clipped / self.reliable.size


@dataclass(frozen=True)
class FeasibleSet:
    """The consistency set Gamma = Gamma_R & Gamma_H & Gamma_L of a mask.

    ``theta_max`` optionally caps the magnitude of clipped samples.
    """

    mask: ClipMask
    theta_max: Optional[float] = None

    def __post_init__(self):
        if self.theta_max is not None and not self.theta_max >= self.mask.theta_c:
            raise ClippingError("theta_max must be >= theta_c")


@dataclass
class Restoration:
    """What a declipping solver returns: the estimate plus solver bookkeeping."""

    samples: np.ndarray
    iterations: int = 0
    notes: dict = field(default_factory=dict)


@dataclass
class DeclipReport:
    """Evaluation record for one (signal, input SDR, method) cell."""

    signal: str
    method: str
    input_sdr: float
    output_sdr: float
    delta_sdr: float
    delta_sdr_clipped: float
    iterations: int
    wall_time: float
    consistent_reliable: bool
    consistent_clipped: bool
    percent_clipped: float = 0.0
    theta_c: float = 0.0
    notes: dict = field(default_factory=dict)


def _as_samples(x):
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def clip(x, theta_c):
    """Hard-clip ``x`` at +-theta_c.

    Returns
    -------
    y : ndarray
        The clipped observation.
    mask : ClipMask
        ``|x| < theta_c`` is reliable, ``x >= theta_c`` high, ``x <= -theta_c`` low.
    """
    x = _as_samples(x)
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.isfinite(x))
        raise ClippingError(f"non-finite input sample at index {bad[0]}")
    if not theta_c > 0:
        raise ClippingError("theta_c must be positive")
    high = x >= theta_c
    low = x <= -theta_c
    y = np.clip(x, -theta_c, theta_c)
    return y, ClipMask(~(high | low), high, low, theta_c)


def project_gamma(u, fs, y):
    """Euclidean projection of ``u`` onto the feasible set (elementwise).

    Works for any array shape matching the mask (e.g. a stack of blocks).
    """
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if isinstance(fs, ClipMask):
        fs = FeasibleSet(fs)
    m = fs.mask
    if u.shape != y.shape or u.shape != m.reliable.shape:
        raise ClippingError(f"shape mismatch: u {u.shape}, y {y.shape}, mask {m.reliable.shape}")
    th = m.theta_c
    hi = np.maximum(u, th)
    lo = np.minimum(u, -th)
    if fs.theta_max is not None:
        hi = np.minimum(hi, fs.theta_max)
        lo = np.maximum(lo, -fs.theta_max)
    return np.where(m.reliable, y, np.where(m.high, hi, np.where(m.low, lo, u)))


def project_clipped(u, fs):
    """Projection onto Gamma_H & Gamma_L only (reliable samples are free)."""
    u = np.asarray(u, dtype=np.float64)
    if isinstance(fs, ClipMask):
        fs = FeasibleSet(fs)
    m = fs.mask
    th = m.theta_c
    hi = np.maximum(u, th)
    lo = np.minimum(u, -th)
    if fs.theta_max is not None:
        hi = np.minimum(hi, fs.theta_max)
        lo = np.maximum(lo, -fs.theta_max)
    return np.where(m.high, hi, np.where(m.low, lo, u))


def in_gamma_reliable(x, mask, y):
    """Exact membership test for Gamma_R."""
    x = np.asarray(x)
    return bool(np.array_equal(x[mask.reliable], np.asarray(y)[mask.reliable]))


def in_gamma_clipped(x, mask, theta_max=None):
    """Exact membership test for Gamma_H & Gamma_L."""
    x = np.asarray(x)
    th = mask.theta_c
    ok = bool(np.all(x[mask.high] >= th) and np.all(x[mask.low] <= -th))
    if ok and theta_max is not None:
        ok = bool(np.all(x[mask.high] <= theta_max) and np.all(x[mask.low] >= -theta_max))
    return ok


def distance_to_gamma(x, mask, y):
    """Euclidean distance from ``x`` to the feasible set."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.linalg.norm(x - project_gamma(x, mask, y)))


def snap_to_gamma(x, mask, y, tol=1e-8, theta_max=None):
    """Remove round-off infeasibility from a solver output.

    The correction is applied only when its largest entry is below
    ``tol * theta_c``; otherwise ``x`` is returned unchanged so that a real
    violation still shows up in the consistency flags.
    """
    p = project_gamma(x, FeasibleSet(mask, theta_max), y)
    if np.max(np.abs(p - x), initial=0.0) <= tol * mask.theta_c:
        return p
    return np.asarray(x, dtype=np.float64)


def sdr(u, v):
    """20 log10(||u|| / ||u - v||) in dB; ``SDR_CAP`` when u == v."""
    u = _as_samples(u)
    v = _as_samples(v)
    if u.shape != v.shape:
        raise ClippingError("sdr: length mismatch")
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ClippingError("sdr undefined for a zero reference")
    nd = np.linalg.norm(u - v)
    if nd == 0:
        return SDR_CAP
    return min(SDR_CAP, 20.0 * math.log10(nu / nd))


def sdr_clipped(x, xhat, mask):
    """SDR restricted to the clipped indices H & L."""
    c = mask.clipped
    if not np.any(c):
        raise ClippingError("nothing was clipped")
    return sdr(_as_samples(x)[c], _as_samples(xhat)[c])


def delta_sdr(x, y, xhat):
    """SDR improvement over the clipped observation, on the whole signal."""
    out = sdr(x, xhat)
    if out >= SDR_CAP:
        return SDR_CAP
    return out - sdr(x, y)


def delta_sdr_clipped(x, y, xhat, mask):
    """SDRc improvement over the clipped observation."""
    out = sdr_clipped(x, xhat, mask)
    if out >= SDR_CAP:
        return SDR_CAP
    return out - sdr_clipped(x, y, mask)


def clip_to_target_sdr(x, target, tol=0.01, max_iter=200):
    """Find theta_c so that SDR(x, clip(x, theta_c)) hits ``target`` dB.

    The input SDR increases strictly with theta_c on (0, max|x|), going from
    0 dB to +inf, so plain bisection brackets any positive target.

    Returns ``(y, mask, theta_c)``.
    """
    x = _as_samples(x)
    peak = float(np.max(np.abs(x)))
    if peak == 0:
        raise ClippingError("cannot clip an all-zero signal to a target SDR")
    if not (target > 0 and math.isfinite(target)):
        raise ClippingError(f"target SDR {target} dB is not reachable (must be in (0, inf))")
    lo, hi = 0.0, peak
    theta = 0.5 * peak
    for _ in range(max_iter):
        theta = 0.5 * (lo + hi)
        y, mask = clip(x, theta)
        s = sdr(x, y)
        if abs(s - target) <= tol:
            return y, mask, theta
        if s < target:
            lo = theta
        else:
            hi = theta
    raise ClippingError(f"bisection did not reach {target} dB within {tol} dB")
