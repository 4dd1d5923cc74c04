"""Dictionary learning from clipped observations.

Alternates consistent IHT (sparse coding) and a projected accelerated
gradient step on the dictionary, both minimising

    sum_t 1/2 d(D z_t, Gamma_t)^2,   ||z_t||_0 <= K_t,   ||d_p||_2 <= 1.

Blocks are stored as rows: ``Z`` is ``(T, P)``, the block estimates are
``Z @ D.T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import BlockPlan, TransformSpec, overlap_add, split_blocks
from .shrinkage import hard_threshold_k
from .signal import ClipMask, Restoration, project_gamma


@dataclass(frozen=True)
class DLConfig:
    n_atoms: int = 2048
    outer_iters: int = 20
    iht_iters: int = 20
    dict_steps: int = 20
    eps: float = 0.01  # adaptive sparsity target, relative to ||y_t||
    ramp_every: int = 5  # IHT iterations per sparsity level during the ramp
    k_step: int = 1  # sparsity increment of the ramp
    max_k: int | None = None  # defaults to n_atoms

    def __post_init__(self):
        if self.n_atoms < 1 or self.outer_iters < 0 or self.iht_iters < 0 or self.dict_steps < 0:
            raise ValueError("invalid DL configuration")
        if self.ramp_every < 1 or self.k_step < 1:
            raise ValueError("ramp_every and k_step must be >= 1")


def dct_dictionary(n, P):
    """Real DCT dictionary ``n x P`` (first ``n`` rows of the orthonormal DCT-II)."""
    if P < n:
        raise ValueError("need at least as many atoms as samples per block")
    return TransformSpec("block-dct", "rectangular", n, n, P).assemble().atoms()


def project_columns(D):
    """Scale every column with norm above 1 back onto the unit sphere."""
    nrm = np.linalg.norm(D, axis=0)
    return D / np.maximum(nrm, 1.0)


def spectral_norm_sq(M, iters=50, seed=0):
    """``||M||_2^2`` by power iteration on ``M^T M`` (seeded start)."""
    v = np.random.default_rng(seed).standard_normal(M.shape[1])
    lam = 0.0
    for _ in range(iters):
        u = M.T @ (M @ v)
        lam = np.linalg.norm(u)
        if lam == 0:
            return 0.0
        v = u / lam
    return float(lam)


def residual(X, mask, Y):
    """``X - proj_Gamma(X)`` row by row."""
    return X - project_gamma(X, mask, Y)


def distance_sq(X, mask, Y):
    """Per-block squared distance ``d(x_t, Gamma_t)^2``."""
    return np.sum(residual(X, mask, Y) ** 2, axis=-1)


def objective(D, Z, mask, Y):
    return 0.5 * float(np.sum(distance_sq(Z @ D.T, mask, Y)))


def coding_gradient(D, Z, mask, Y):
    """Gradient in ``Z`` of ``sum_t 1/2 d(D z_t, Gamma_t)^2``."""
    return residual(Z @ D.T, mask, Y) @ D


def consistent_iht(Z, Y, mask, D, K, mu, iters):
    """``z <- H_K(z - mu D^T (D z - proj_Gamma(D z)))``, ``iters`` times.

    ``K`` may be a per-block array.
    """
    Z = np.array(Z, dtype=np.float64)
    for _ in range(iters):
        Z = hard_threshold_k(Z - mu * coding_gradient(D, Z, mask, Y), K)
    return Z


def adaptive_sparsity(Y, mask, D, mu, eps=0.01, ramp_every=5, max_k=None, Z0=None, k_step=1):
    """Consistent IHT with K = 1, 1 + k_step, ... until ``d(D z_t, Gamma_t) <= eps ||y_t||``.

    Every block has its own level; a block stops ramping as soon as it meets
    the target (checked after every ``ramp_every`` iterations) or K reaches
    ``max_k`` (at most the number of atoms).  Returns ``(Z, K)``.
    """
    Y = np.atleast_2d(Y)
    P = D.shape[1]
    cap = P if max_k is None else min(max_k, P)
    T = Y.shape[0]
    Z = np.zeros((T, P)) if Z0 is None else np.array(Z0, dtype=np.float64)
    K = np.ones(T, dtype=int)
    target = eps * np.linalg.norm(Y, axis=-1)
    active = np.ones(T, dtype=bool)
    while True:
        rows = np.flatnonzero(active)
        sub = _rows(mask, rows)
        Z[rows] = consistent_iht(Z[rows], Y[rows], sub, D, K[rows], mu, ramp_every)
        dist = np.sqrt(distance_sq(Z[rows] @ D.T, sub, Y[rows]))
        done = (dist <= target[rows]) | (K[rows] >= cap)
        active[rows[done]] = False
        if not active.any():
            return Z, K
        K[active] = np.minimum(K[active] + k_step, cap)


def _rows(mask, rows):
    return ClipMask(mask.reliable[rows], mask.high[rows], mask.low[rows], mask.theta_c)


def dict_update(D, Z, mask, Y, steps=20, history=None):
    """Monotone FISTA on ``D`` with column projection onto the unit ball.

    Step ``1 / ||Z||_2^2`` (the Lipschitz constant of the gradient in ``D``).
    A candidate that raises the objective is not accepted; the momentum then
    restarts from the last accepted point, so the objective never increases.
    """
    D = project_columns(np.array(D, dtype=np.float64))
    L = spectral_norm_sq(Z)
    if L == 0 or steps == 0:
        return D
    f = objective(D, Z, mask, Y)
    if history is not None:
        history.append(f)
    V, D_prev, t = D, D, 1.0
    for _ in range(steps):
        G = residual(Z @ V.T, mask, Y).T @ Z
        U = project_columns(V - G / L)
        fu = objective(U, Z, mask, Y)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        if fu <= f:
            D_prev, D, f = D, U, fu
            V = D + ((t - 1) / t_new) * (D - D_prev)
        else:
            V = D
            t_new = 1.0
        t = t_new
        if history is not None:
            history.append(f)
    return D


def dl_declip(y, mask, plan=BlockPlan(1024, 256, "hann"), cfg=DLConfig(), history=None):
    """Dictionary-learning declipper.

    The dictionary is learned on every block of the signal (clipped or not)
    and each clipped block is replaced by ``D z_t``; blocks without clipped
    samples are passed through.  The result is not projected onto Gamma.
    ``history`` (a list) receives the objective after every sparse-coding
    and dictionary-update step.
    """
    if plan.analysis_window:
        raise ValueError("DL blocks must be cut without an analysis window")
    y = np.asarray(y, dtype=np.float64)
    Y = split_blocks(y, plan)
    bm = plan.split_mask(mask)
    D = dct_dictionary(plan.block_length, cfg.n_atoms)
    mu = 1.0 / spectral_norm_sq(D)
    Z, K = adaptive_sparsity(Y, bm, D, mu, cfg.eps, cfg.ramp_every, cfg.max_k,
                              k_step=cfg.k_step)
    for i in range(cfg.outer_iters):
        if i > 0:
            Z = consistent_iht(Z, Y, bm, D, K, mu, cfg.iht_iters)
        if history is not None:
            history.append(("code", objective(D, Z, bm, Y)))
        D = dict_update(D, Z, bm, Y, cfg.dict_steps)
        mu = 1.0 / spectral_norm_sq(D)
        if history is not None:
            history.append(("dict", objective(D, Z, bm, Y)))
    est = Z @ D.T
    clipped = bm.clipped.any(axis=-1)
    est[~clipped] = Y[~clipped]
    x = overlap_add(est, plan, y.size)
    notes = {"sparsity": K, "objective": objective(D, Z, bm, Y), "dictionary": D}
    return Restoration(x, cfg.outer_iters, notes)
