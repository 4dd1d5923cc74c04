"""Constrained OMP declipping.

Per block: OMP on the reliable samples with a real overcomplete DCT whose
columns are re-weighted to unit energy on the reliable rows, then a
least-squares refit on the selected support under the clipping constraints

    min ||M_R (y - D_S z_S)||   s.t.   D_S z_S in Gamma_H & Gamma_L.

Whitening by the QR factor of ``M_R D_S`` turns the refit into a
least-distance program, solved exactly through NNLS.  When it is infeasible
(or the solver fails) the unconstrained OMP synthesis is kept and the block
is counted as a fallback.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls

from .dictlearn import dct_dictionary
from .frames import BlockPlan, overlap_add, split_blocks
from .signal import ClipMask, Restoration, project_clipped


@dataclass(frozen=True)
class OMPConfig:
    epsilon: float = 0.01  # stop when ||M_R (y - D z)|| <= epsilon * ||M_R y||
    max_atoms: int | None = None  # defaults to the number of reliable samples
    redundancy: int = 2
    tol: float = 1e-9  # accepted constraint violation of the refit, relative to theta_c

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.redundancy < 1:
            raise ValueError("redundancy must be >= 1")


def omp_reliable(y_t, reliable, D, epsilon, max_atoms=None, history=None):
    """OMP on the reliable rows with energy-normalised columns.

    ``epsilon`` is an absolute residual bound.  Returns ``(z, support)``
    where ``z`` are coefficients of the unweighted dictionary.  ``history``
    (a list) receives the residual norm before the first and after every
    selection.
    """
    reliable = np.asarray(reliable, dtype=bool)
    if not reliable.any():
        raise ValueError("OMP needs at least one reliable sample")
    DR = D[reliable]
    b = np.asarray(y_t, dtype=np.float64)[reliable]
    nrm = np.linalg.norm(DR, axis=0)
    usable = nrm > 1e-12 * max(nrm.max(), 1e-300)
    w = np.where(usable, 1.0 / np.where(usable, nrm, 1.0), 0.0)
    Dw = DR * w
    cap = DR.shape[0] if max_atoms is None else min(max_atoms, DR.shape[0])
    cap = min(cap, int(usable.sum()))
    r = b.copy()
    Q = np.zeros((b.size, cap))
    support = []
    if history is not None:
        history.append(float(np.linalg.norm(r)))
    while np.linalg.norm(r) > epsilon and len(support) < cap:
        corr = np.abs(Dw.T @ r)
        corr[support] = -1.0
        corr[~usable] = -1.0
        j = int(np.argmax(corr))
        q = Dw[:, j].copy()
        k = len(support)
        for _ in range(2):  # Gram-Schmidt with one re-orthogonalisation
            q -= Q[:, :k] @ (Q[:, :k].T @ q)
        qn = np.linalg.norm(q)
        if qn <= 1e-10:
            break  # the new atom is (numerically) in the span already
        q /= qn
        Q[:, k] = q
        support.append(j)
        r -= q * (q @ r)
        if history is not None:
            history.append(float(np.linalg.norm(r)))
    z = np.zeros(D.shape[1])
    if support:
        z[support] = np.linalg.lstsq(DR[:, support], b, rcond=None)[0]
    return z, np.array(support, dtype=int)


def constrained_refit(y_t, mask_t, D, support, tol=1e-9):
    """Clip-constrained least squares on a fixed support.

    Returns ``(z, ok)``; ``ok`` is False when the program is infeasible or
    the solver fails, in which case ``z`` is None.
    """
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise ValueError("empty support")
    y_t = np.asarray(y_t, dtype=np.float64)
    th = mask_t.theta_c
    A = D[mask_t.reliable][:, support]
    b = y_t[mask_t.reliable]
    # constraints C z >= c: high rows as they are, low rows with flipped sign
    C = np.vstack([D[mask_t.high][:, support], -D[mask_t.low][:, support]])
    c = np.full(C.shape[0], th)
    Q, R = np.linalg.qr(A)
    if np.min(np.abs(np.diag(R))) <= 1e-12 * np.max(np.abs(np.diag(R))):
        return None, False
    z0 = sla.solve_triangular(R, Q.T @ b)
    if C.shape[0] == 0 or np.all(C @ z0 >= c):
        return z0, True
    # u = R (z - z0): min ||u|| s.t. G u >= d, a least-distance program
    G = sla.solve_triangular(R, C.T, trans="T").T
    d = c - C @ z0
    E = np.vstack([G.T, d[None, :]])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    try:
        lam, _ = nnls(E, f, maxiter=50 * E.shape[1])
    except RuntimeError:
        return None, False
    res = E @ lam - f
    if abs(res[-1]) <= 1e-12:
        return None, False  # infeasible
    u = -res[:-1] / res[-1]
    z = z0 + sla.solve_triangular(R, u)
    if not np.isfinite(z).all() or np.min(C @ z - c) < -tol * th:
        return None, False
    return z, True


def comp_declip(y, mask, plan=BlockPlan(1024, 256, "hann"), cfg=OMPConfig()):
    """Blockwise C-OMP followed by overlap-add.

    Blocks without clipped samples are passed through.  Blocks whose refit
    fails keep the plain OMP synthesis; their count is in
    ``notes["fallback_blocks"]``.
    """
    if plan.analysis_window:
        raise ValueError("C-OMP blocks must be cut without an analysis window")
    y = np.asarray(y, dtype=np.float64)
    Y = split_blocks(y, plan)
    bm = plan.split_mask(mask)
    D = dct_dictionary(plan.block_length, cfg.redundancy * plan.block_length)
    est = Y.copy()
    fallback = 0
    atoms = []
    for t in np.flatnonzero(bm.clipped.any(axis=-1)):
        m_t = ClipMask(bm.reliable[t], bm.high[t], bm.low[t], mask.theta_c)
        if not m_t.reliable.any():
            est[t] = 0.0
            fallback += 1
            continue
        eps = cfg.epsilon * np.linalg.norm(Y[t][m_t.reliable])
        z, support = omp_reliable(Y[t], m_t.reliable, D, eps, cfg.max_atoms)
        atoms.append(support.size)
        if support.size:
            zs, ok = constrained_refit(Y[t], m_t, D, support, cfg.tol)
        else:
            ok = False
        if ok:
            x = D[:, support] @ zs
            # remove the tolerated round-off on the clipped samples
            est[t] = project_clipped(x, m_t)
        else:
            est[t] = D @ z
            fallback += 1
    x = overlap_add(est, plan, y.size)
    if fallback == 0:
        p = project_clipped(x, mask)
        if np.max(np.abs(p - x), initial=0.0) <= 1e-8 * mask.theta_c:
            x = p
    notes = {"fallback_blocks": fallback, "max_atoms": max(atoms, default=0)}
    return Restoration(x, len(atoms), notes)
