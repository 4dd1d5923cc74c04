"""Thresholding and shrinkage operators shared by the solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

SOCIAL_KINDS = ("L", "WGL", "EW", "PEW")


@dataclass(frozen=True)
class Neighborhood:
    """Centered time-frequency box, truncated at the grid borders."""

    extent_freq: int = 3
    extent_time: int = 7

    def __post_init__(self):
        for e in (self.extent_freq, self.extent_time):
            if e < 1 or e % 2 == 0:
                raise ValueError("neighborhood extents must be odd and >= 1")


def _half_to_full(n):
    """Index map sending every DFT bin to its representative in 0..n//2."""
    m = np.arange(n)
    return np.minimum(m, n - m) if n > 1 else m


def hard_threshold_k(z, k, conjugate_pairs=False):
    """Keep the ``k`` largest-magnitude entries along the last axis.

    With ``conjugate_pairs`` the last axis is a DFT spectrum of a real signal:
    bins ``m`` and ``P - m`` are kept or dropped together and count once.
    Ties go to the lowest index.  ``k`` may be an array broadcasting over the
    leading axes.
    """
    z = np.asarray(z)
    P = z.shape[-1]
    n_ind = P // 2 + 1 if conjugate_pairs else P
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k > n_ind):
        raise ValueError(f"k must lie in [0, {n_ind}]")
    mag = np.abs(z[..., :n_ind]) if conjugate_pairs else np.abs(z)
    order = np.argsort(-mag, axis=-1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(n_ind), axis=-1)
    keep = rank < k[..., None] if k.ndim else rank < k
    if conjugate_pairs:
        keep = keep[..., _half_to_full(P)]
    return np.where(keep, z, 0)


def soft_threshold(z, thresh):
    """Magnitude soft thresholding ``z * max(1 - thresh/|z|, 0)``.

    ``thresh`` is a scalar or an array broadcasting against ``z``; the phase
    of complex entries is preserved.
    """
    z = np.asarray(z)
    mag = np.abs(z)
    gain = np.maximum(1.0 - np.divide(thresh, mag, out=np.full(mag.shape, np.inf), where=mag > 0), 0.0)
    return z * gain


def clip_conjugate(z, thresh):
    """``(Id - soft_thresh)(z)``: projection onto ``|z| <= thresh``."""
    return z - soft_threshold(z, thresh)


def neighborhood_energy(energy, nb):
    """Sum of ``energy`` over the neighborhood of every grid point."""
    kernel = np.ones((nb.extent_freq, nb.extent_time))
    return ndimage.correlate(energy, kernel, mode="constant", cval=0.0)


def shrink_social(z, lam, kind, nb=None, conjugate_symmetric=False):
    """Social shrinkage of a frequency x time coefficient grid.

    ``L``   z * max(1 - lam / |z|, 0)
    ``EW``  z * max(1 - lam^2 / |z|^2, 0)
    ``WGL`` z * max(1 - lam / ||N(z)||, 0)
    ``PEW`` z * max(1 - lam^2 / ||N(z)||^2, 0)

    With ``conjugate_symmetric`` the grid rows are the full DFT of real
    frames; gains are computed on rows ``0..F//2`` and mirrored so the output
    stays symmetric (otherwise truncated neighborhoods would break it).
    """
    if kind not in SOCIAL_KINDS:
        raise ValueError(f"unknown shrinkage kind {kind!r}")
    z = np.asarray(z)
    if kind in ("WGL", "PEW") and nb is None:
        raise ValueError(f"{kind} shrinkage needs a neighborhood")
    if kind == "L":
        return soft_threshold(z, lam)
    F = z.shape[0]
    rows = F // 2 + 1 if conjugate_symmetric else F
    energy = np.abs(z[:rows]) ** 2
    if kind in ("WGL", "PEW"):
        energy = neighborhood_energy(energy, nb)
    if kind in ("L", "WGL"):
        ratio = np.divide(lam, np.sqrt(energy), out=np.full(energy.shape, np.inf), where=energy > 0)
    else:
        ratio = np.divide(lam ** 2, energy, out=np.full(energy.shape, np.inf), where=energy > 0)
    gain = np.maximum(1.0 - ratio, 0.0)
    if conjugate_symmetric:
        gain = gain[_half_to_full(F)]
    return z * gain


def hinge(u):
    """Elementwise ``min(u, 0)``."""
    return np.minimum(np.asarray(u, dtype=np.float64), 0.0)
