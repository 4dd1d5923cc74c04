"""Janssen autoregressive interpolation of clipped samples.

The clipped samples are treated as missing.  In each block the AR model is
re-estimated from the current signal and the missing samples are replaced
by the values that minimise the prediction-error energy

    || a * x ||^2   (full convolution, zeros outside the block)

with the reliable samples held fixed.  Clipping thresholds are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.signal as ss

from .frames import BlockPlan, overlap_add, split_blocks
from .signal import Restoration

ESTIMATORS = ("autocorrelation", "covariance")
DIVERGENCE_FACTOR = 100.0


@dataclass(frozen=True)
class JanssenConfig:
    order: int = 512
    iters: int = 3
    estimator: str = "autocorrelation"
    ridge: float = 1e-10  # relative ridge, only used if a Cholesky fails

    def __post_init__(self):
        if self.order < 1 or self.iters < 0:
            raise ValueError("invalid Janssen configuration")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass
class ArModel:
    """Prediction-error filter ``a`` with ``a[0] = 1``."""

    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a[0] != 1.0 or not np.isfinite(self.a).all():
            raise ValueError("AR coefficients need a[0] = 1 and finite entries")

    @property
    def order(self):
        return self.a.size - 1


def ar_estimate(x, p, method="autocorrelation", rows=None):
    """Fit an order-``p`` AR model to ``x``.

    ``autocorrelation`` solves the Yule-Walker equations by Levinson
    recursion (stable filter).  ``covariance`` is the least-squares fit of the
    prediction equations ``x[n] + sum_k a_k x[n-k] = 0`` for ``n = p..N-1``,
    optionally restricted to the boolean selection ``rows`` (indexed by
    ``n``).  An all-zero block gives the trivial model ``a = [1, 0, ...]``.
    """
    x = np.asarray(x, dtype=np.float64)
    N = x.size
    if N <= p:
        raise ValueError(f"block of {N} samples is too short for order {p}")
    if not np.any(x):
        return ArModel(np.r_[1.0, np.zeros(p)])
    if method == "autocorrelation":
        r = ss.correlate(x, x, mode="full", method="fft")[N - 1 : N + p] / N
        if r[0] <= 0:
            return ArModel(np.r_[1.0, np.zeros(p)])
        coef = sla.solve_toeplitz(r[:p], -r[1 : p + 1])
    elif method == "covariance":
        # row n holds x[n-1], ..., x[n-p]
        X = sla.toeplitz(x[p - 1 : N - 1], x[p - 1 :: -1])
        t = x[p:]
        if rows is not None:
            sel = np.asarray(rows, dtype=bool)[p:]
            X, t = X[sel], t[sel]
        if t.size == 0:
            return ArModel(np.r_[1.0, np.zeros(p)])
        coef = np.linalg.lstsq(X, -t, rcond=None)[0]
    else:
        raise ValueError(f"unknown estimator {method!r}")
    return ArModel(np.r_[1.0, coef])


def prediction_error(x, a):
    """Full-convolution prediction error energy ``||a * x||^2``."""
    return float(np.sum(np.convolve(a, x) ** 2))


def ls_fill(x, missing, a, ridge=1e-10):
    """Missing samples minimising ``||a * x||^2``; returns ``(x, ridged)``.

    The normal matrix of the full convolution is Toeplitz with the
    autocorrelation of ``a`` on its diagonals.
    """
    x = np.array(x, dtype=np.float64)
    miss = np.flatnonzero(missing)
    if miss.size == 0:
        return x, False
    p = a.size - 1
    b = np.correlate(a, a, mode="full")[p:]  # lags 0..p
    x0 = x.copy()
    x0[miss] = 0.0
    Bx = np.correlate(np.convolve(a, x0), a, mode="valid")
    lag = np.abs(miss[:, None] - miss[None, :])
    Bmm = np.where(lag <= p, b[np.minimum(lag, p)], 0.0)
    ridged = False
    try:
        c = sla.cho_factor(Bmm, lower=True)
    except np.linalg.LinAlgError:
        ridged = True
        c = sla.cho_factor(Bmm + ridge * max(b[0], 1e-300) * np.eye(miss.size), lower=True)
    x[miss] = -sla.cho_solve(c, Bx[miss])
    return x, ridged


def janssen_block(y_t, missing, cfg=JanssenConfig()):
    """Janssen iterations on one block.

    Returns ``(x, info)`` with ``info`` holding ``ridged`` and ``reverted``
    (the energy guard fired and the previous iterate was kept).
    """
    y_t = np.asarray(y_t, dtype=np.float64)
    missing = np.asarray(missing, dtype=bool)
    x = np.where(missing, 0.0, y_t)
    info = {"ridged": False, "reverted": False, "iters": 0}
    if not missing.any():
        return x, info
    # prediction rows touching only observed samples (covariance method, first pass)
    support = np.convolve(missing.astype(float), np.ones(cfg.order + 1))[: y_t.size] == 0
    energy = float(np.sum(x**2))
    for i in range(cfg.iters):
        rows = support if i == 0 else None
        model = ar_estimate(x, cfg.order, cfg.estimator, rows)
        x_new, ridged = ls_fill(x, missing, model.a, cfg.ridge)
        info["ridged"] |= ridged
        e_new = float(np.sum(x_new**2))
        if not np.isfinite(e_new) or (energy > 0 and e_new > DIVERGENCE_FACTOR * energy):
            info["reverted"] = True
            break
        x, energy = x_new, e_new
        info["iters"] = i + 1
    return x, info


def janssen_declip(y, mask, plan=BlockPlan(2048, 512, "hann"), cfg=JanssenConfig()):
    """Blockwise Janssen interpolation of the clipped samples.

    Reliable samples are returned unchanged; the clipped ones are not forced
    beyond the thresholds.
    """
    if plan.analysis_window:
        raise ValueError("Janssen blocks must be cut without an analysis window")
    y = np.asarray(y, dtype=np.float64)
    Y = split_blocks(y, plan)
    bm = plan.split_mask(mask)
    # the zero padding at both ends is not data: edge blocks are trimmed to the
    # signal, with the order reduced if the remaining segment is too short
    inside = split_blocks(np.ones(y.size), plan) != 0
    est = Y.copy()
    ridged = reverted = 0
    for t in np.flatnonzero(bm.clipped.any(axis=-1)):
        seg = np.flatnonzero(inside[t])
        sub = cfg if seg.size > 2 * cfg.order else replace(cfg, order=max(1, seg.size // 2))
        est[t, seg], info = janssen_block(Y[t, seg], bm.clipped[t, seg], sub)
        ridged += info["ridged"]
        reverted += info["reverted"]
    x = overlap_add(est, plan, y.size)
    x[mask.reliable] = y[mask.reliable]
    return Restoration(x, cfg.iters, {"ridged_blocks": ridged, "reverted_blocks": reverted})
