"""Declipping with an Itakura-Saito NMF model of the power spectrogram.

Windowed blocks ``x_t`` have unitary DFT coefficients ``z_t = A x_t`` that are
modelled as zero-mean Gaussian with variances ``v_ft = [W H]_ft``.  A GEM loop
alternates

* the Wiener posterior of every block given its reliable samples, together
  with the posterior power ``p_ft = |z_ft|^2 + Sigma_t(f, f)``;
* one pair of multiplicative updates of ``W`` and ``H`` on ``P``.

The model lives on the ``F // 2 + 1`` non-negative frequencies and is
mirrored onto the full DFT grid, so the prior is that of a real signal and
all estimates are real.  Conditioning is done with the precision matrix
``Q = A* diag(1/v) A`` (circulant), which only needs a solve of the size of
the missing set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .frames import BlockPlan, overlap_add, split_blocks
from .shrinkage import _half_to_full
from .signal import ClipMask, Restoration, snap_to_gamma

EPS_NMF = 1e-12


@dataclass(frozen=True)
class NMFConfig:
    rank: int = 20
    iters: int = 50
    seed: int = 0
    max_repeats: int = 50  # cap on the ad hoc consistency pass
    ridge: float = 1e-10  # relative ridge, only used if a Cholesky fails

    def __post_init__(self):
        if self.rank < 1 or self.iters < 1 or self.max_repeats < 0:
            raise ValueError("invalid NMF configuration")


@dataclass
class NmfModel:
    W: np.ndarray
    H: np.ndarray

    @property
    def V(self):
        return np.maximum(self.W @ self.H, EPS_NMF)


def is_divergence(P, V):
    """Itakura-Saito divergence ``sum P/V - log(P/V) - 1``."""
    P = np.maximum(P, EPS_NMF)
    V = np.maximum(V, EPS_NMF)
    r = P / V
    return float(np.sum(r - np.log(r) - 1))


def mu_update(W, H, P):
    """One pair of IS multiplicative updates (``W`` then ``H``)."""
    V = np.maximum(W @ H, EPS_NMF)
    W = W * (((P / V**2) @ H.T) / np.maximum((1 / V) @ H.T, EPS_NMF))
    V = np.maximum(W @ H, EPS_NMF)
    H = H * ((W.T @ (P / V**2)) / np.maximum(W.T @ (1 / V), EPS_NMF))
    # column scaling of W moved into H: same product, bounded factors
    s = np.maximum(W.sum(axis=0), EPS_NMF)
    return W / s, H * s[:, None]


def full_variances(v_half, F):
    """Mirror half-spectrum variances onto the ``F`` DFT bins."""
    return v_half[_half_to_full(F)]


def _conditional(y_t, reliable, v, ridge, with_cov=True):
    """Conditional mean of ``x`` (and covariance of the missing part)."""
    F = y_t.size
    miss = np.flatnonzero(~reliable)
    x = np.where(reliable, y_t, 0.0)
    if miss.size == 0:
        return x, miss, np.zeros((0, 0)), False
    # first column of the circulant precision matrix Q = A* diag(1/v) A
    qf = 1.0 / v
    q = sfft.ifft(qf).real
    qx = sfft.ifft(qf * sfft.fft(x)).real
    Qmm = q[(miss[:, None] - miss[None, :]) % F]
    ridged = False
    try:
        c = sla.cho_factor(Qmm, lower=True)
    except np.linalg.LinAlgError:
        ridged = True
        Qmm = Qmm + ridge * np.trace(Qmm) / miss.size * np.eye(miss.size)
        c = sla.cho_factor(Qmm, lower=True)
    x[miss] = -sla.cho_solve(c, qx[miss])
    S = sla.cho_solve(c, np.eye(miss.size)) if with_cov else None
    return x, miss, S, ridged


def _posterior_power(x, miss, S):
    """``|A x|^2 + diag(A Sigma A*)`` with ``Sigma`` supported on ``miss``.

    The diagonal only depends on the sums of ``Sigma`` along circular
    diagonals, so it is one FFT of those sums.
    """
    F = x.size
    z = sfft.fft(x, norm="ortho")
    p = np.abs(z) ** 2
    if miss.size:
        lag = (miss[:, None] - miss[None, :]) % F
        sums = np.bincount(lag.ravel(), weights=S.ravel(), minlength=F)
        p = p + np.maximum(sfft.fft(sums).real / F, 0.0)
    return z, p


def wiener_posterior(y_t, reliable, v, ridge=1e-10):
    """Posterior mean and power of ``z = A x`` given ``x[reliable] = y_t[reliable]``.

    ``v`` holds strictly positive variances on all ``F`` DFT bins and must be
    conjugate-symmetric.  Returns ``(z_hat, x_hat, p_hat, ridged)``.
    """
    y_t = np.asarray(y_t, dtype=np.float64)
    reliable = np.asarray(reliable, dtype=bool)
    if not reliable.any():
        return np.zeros(y_t.size, complex), np.zeros(y_t.size), np.array(v, dtype=float), False
    x, miss, S, ridged = _conditional(y_t, reliable, v, ridge)
    z, p = _posterior_power(x, miss, S)
    return z, x, p, ridged


def consistent_posterior(y_t, mask_t, thresholds, v, cfg=NMFConfig()):
    """Wiener posterior with the ad hoc clipping-consistency pass.

    Clipped samples of the estimate that fall short of their (windowed)
    threshold are set to it and treated as reliable, then the posterior is
    recomputed; at most ``cfg.max_repeats`` times.  Returns
    ``(x_hat, p_hat, repeats, satisfied, ridged)``.
    """
    obs = np.array(y_t, dtype=np.float64)
    reliable = mask_t.reliable.copy()
    if not reliable.any():
        return wiener_posterior(obs, reliable, v)[1:3] + (0, True, False)
    ridged = False
    satisfied = False
    rep = 0
    while True:
        x, miss, _, r = _conditional(obs, reliable, v, cfg.ridge, with_cov=False)
        ridged |= r
        bad = (mask_t.high & ~reliable & (x < thresholds)) | (mask_t.low & ~reliable & (x > -thresholds))
        if not bad.any():
            satisfied = True
            break
        if rep == cfg.max_repeats:
            break
        obs[bad] = np.where(mask_t.high[bad], thresholds[bad], -thresholds[bad])
        reliable = reliable | bad
        rep += 1
    x, miss, S, r = _conditional(obs, reliable, v, cfg.ridge)
    _, p = _posterior_power(x, miss, S)
    return x, p, rep, satisfied, ridged | r


def init_model(P, rank, seed=0):
    """Seeded random nonnegative factors scaled to the mean power of ``P``."""
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.5, 1.5, (P.shape[0], rank))
    H = rng.uniform(0.5, 1.5, (rank, P.shape[1]))
    H *= max(float(np.mean(P)), EPS_NMF) / float(np.mean(W @ H))
    return NmfModel(W, H)


def nmf_declip(y, mask, plan=BlockPlan(512, 256, "sine", analysis_window=True), cfg=NMFConfig(),
               history=None):
    """GEM declipping with an IS-NMF variance model.

    Blocks are windowed by the plan's (sine) window, so the clipping
    thresholds of block ``t`` become ``w_n theta_c``.  The output is the
    weighted overlap-add of the posterior means of the last E-step.
    ``history`` (a list) receives the IS divergence after every MU pair.
    """
    if not plan.analysis_window:
        raise ValueError("NMF works on analysis-windowed blocks")
    y = np.asarray(y, dtype=np.float64)
    Y = split_blocks(y, plan)
    bm = plan.split_mask(mask)
    T, F = Y.shape
    thr = plan.weights * mask.theta_c
    half = F // 2 + 1
    P0 = np.abs(sfft.rfft(Y, axis=-1, norm="ortho").T) ** 2
    model = init_model(P0, cfg.rank, cfg.seed)
    X = Y.copy()
    capped = ridged = 0
    clipped = np.flatnonzero(bm.clipped.any(axis=-1))
    for _ in range(cfg.iters):
        V = model.V
        # blocks without clipped samples are observed exactly
        P = P0.copy()
        capped = ridged = 0
        for t in clipped:
            v = full_variances(V[:, t], F)
            x, p, _, ok, r = consistent_posterior(Y[t], _row(bm, t), thr, v, cfg)
            X[t] = x
            P[:, t] = p[:half]
            capped += not ok
            ridged += r
        model.W, model.H = mu_update(model.W, model.H, P)
        if history is not None:
            history.append(is_divergence(P, model.V))
    out = snap_to_gamma(overlap_add(X, plan, y.size), mask, y)
    notes = {"model": model, "capped_blocks": capped, "ridged_blocks": ridged}
    return Restoration(out, cfg.iters, notes)


def _row(mask, t):
    return ClipMask(mask.reliable[t], mask.high[t], mask.low[t], mask.theta_c)
