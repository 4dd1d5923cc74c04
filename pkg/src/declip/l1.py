"""Convex l1 declippers.

``dr_declip``
    Synthesis model, min ||w * z||_1 s.t. D z in Gamma, by Douglas-Rachford.
``cp_declip``
    Analysis model, min ||w * A x||_1 s.t. x in Gamma, by Chambolle-Pock.
``reweighted_declip``
    Either of the above inside an iteratively reweighted loop.
``cv_declip``
    Blockwise min lam ||w * z||_1 + 1/2 ||M_R (D z - y)||^2 s.t. D z in
    Gamma_H & Gamma_L, by Condat-Vu (unit weights: CSL1, parabola: PWCSL1).

The DR and CP outputs are feasible by construction; the CV output is only
consistent in the limit.
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .frames import BlockPlan, Frame, TransformSpec, overlap_add, project_gamma_star, split_blocks
from .shrinkage import _half_to_full, clip_conjugate, soft_threshold
from .signal import Restoration, project_clipped, project_gamma, snap_to_gamma


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DRConfig:
    lam: float = 1.0
    gamma: float = 1.0
    max_iters: int = 3000
    tol: float = 0.0  # relative coefficient change; 0 runs all iterations


@dataclass(frozen=True)
class CPConfig:
    zeta: float = 1.0
    sigma: float = 1.0
    rho: float = 1.0
    max_iters: int = 3000
    tol: float = 0.0


@dataclass(frozen=True)
class CVConfig:
    lam: float = 0.01
    sigma: float = 1.0
    tau: float = 0.0186
    rho: float = 0.99
    max_iters: int = 500


@dataclass(frozen=True)
class ReweightConfig:
    outer_iters: int = 6
    eps: float = 1e-4
    inner_iters: int = 1000
    delta: float = 0.01


def _frame(spec_or_frame, n):
    if isinstance(spec_or_frame, Frame):
        return spec_or_frame
    return spec_or_frame.assemble(n if spec_or_frame.kind == "gabor" else None)


def _coef_shape(frame):
    return frame.shape if hasattr(frame, "shape") else (frame.n_coef,)


def _rel_change(new, old):
    den = np.linalg.norm(old)
    return np.linalg.norm(new - old) / den if den > 0 else np.inf


def parabola_weights(F, T=None, w0=1e-3, conjugate_symmetric=False):
    """Weights ``w0 + (f / (F - 1))^2`` growing with frequency row ``f``.

    With ``conjugate_symmetric`` the rows are full DFT bins: the parabola is
    laid over ``0..F//2`` and mirrored, so bins ``m`` and ``F - m`` share a
    weight.  Returns a length-``F`` vector, or an ``F x T`` grid when ``T``
    is given.
    """
    if conjugate_symmetric:
        half = F // 2 + 1
        f = _half_to_full(F).astype(float)
        w = w0 + (f / max(half - 1, 1)) ** 2
    else:
        w = w0 + (np.arange(F) / max(F - 1, 1)) ** 2
    return w if T is None else np.repeat(w[:, None], T, axis=1)


def l1_objective(z, w=None):
    a = np.abs(z)
    return float(np.sum(a if w is None else w * a))


# --------------------------------------------------------------------------
# synthesis model: Douglas-Rachford

def dr_iterate(y, mask, frame, w, cfg, z0=None, history=None):
    """Run DR; returns the last feasible coefficient vector ``proj(z)``."""
    z = frame.analyze(y) if z0 is None else z0
    thresh = cfg.gamma * w
    it = 0
    for it in range(1, cfg.max_iters + 1):
        zt = project_gamma_star(z, mask, y, frame)
        if history is not None:
            history.append(l1_objective(zt, w))
        z_new = z + cfg.lam * (soft_threshold(2 * zt - z, thresh) - zt)
        change = _rel_change(z_new, z)
        z = z_new
        if change < cfg.tol:
            break
    return project_gamma_star(z, mask, y, frame), z, it


def dr_declip(y, mask, spec, w=None, cfg=DRConfig(), history=None):
    """Synthesis-model l1 declipping by Douglas-Rachford.

    The returned signal is ``D proj_Gamma*(z)`` for the final iterate, so it
    lies in Gamma.  ``history`` (a list) receives the weighted l1 norm of
    each projected iterate.
    """
    y = np.asarray(y, dtype=np.float64)
    frame = _frame(spec, y.size)
    w = np.ones(_coef_shape(frame)) if w is None else w
    zf, _, it = dr_iterate(y, mask, frame, w, cfg, history=history)
    x = snap_to_gamma(frame.synthesize(zf), mask, y)
    return Restoration(x, it, {"objective": l1_objective(zf, w)})


# --------------------------------------------------------------------------
# analysis model: Chambolle-Pock

def _check_cp(cfg, frame):
    norm2 = 1.0 if frame.is_parseval else None
    if norm2 is not None and cfg.zeta * cfg.sigma * norm2 >= 1:
        warnings.warn(
            f"zeta*sigma*||A||^2 = {cfg.zeta * cfg.sigma * norm2:g} >= 1: "
            "outside the guaranteed-convergence range", ConvergenceWarning, stacklevel=3)


def cp_iterate(y, mask, frame, w, cfg, x0=None, v0=None):
    x = y.copy() if x0 is None else x0
    v = np.zeros(_coef_shape(frame), dtype=complex if frame.spec.conjugate_pairs else float) \
        if v0 is None else v0
    xbar = x
    it = 0
    for it in range(1, cfg.max_iters + 1):
        v_new = clip_conjugate(v + cfg.sigma * frame.analyze(xbar), w)
        x_new = project_gamma(x - cfg.zeta * frame.synthesize(v_new), mask, y)
        xbar = x_new + cfg.rho * (x_new - x)
        # the coefficient-domain variable of CP is the dual v
        change = _rel_change(v_new, v)
        x, v = x_new, v_new
        if change < cfg.tol:
            break
    return x, v, it


def cp_declip(y, mask, spec, w=None, cfg=CPConfig()):
    """Analysis-model l1 declipping by Chambolle-Pock; output lies in Gamma."""
    y = np.asarray(y, dtype=np.float64)
    frame = _frame(spec, y.size)
    _check_cp(cfg, frame)
    w = np.ones(_coef_shape(frame)) if w is None else w
    x, _, it = cp_iterate(y, mask, frame, w, cfg)
    return Restoration(x, it, {"objective": l1_objective(frame.analyze(x), w)})


# --------------------------------------------------------------------------
# reweighting

def reweighted_declip(y, mask, spec, variant="synthesis", cfg=ReweightConfig(),
                      w0=None, dr=DRConfig(), cp=CPConfig()):
    """Iteratively reweighted l1: solve, then ``w = 1 / (|z| + eps)``.

    ``variant`` is ``"synthesis"`` (DR) or ``"analysis"`` (CP).  Each outer
    solve is warm-started from the previous one and stops after
    ``inner_iters`` iterations or when the relative coefficient change falls
    below ``delta``.
    """
    y = np.asarray(y, dtype=np.float64)
    frame = _frame(spec, y.size)
    w = np.ones(_coef_shape(frame)) if w0 is None else w0
    weights = []
    total = 0
    if variant == "synthesis":
        inner = DRConfig(dr.lam, dr.gamma, cfg.inner_iters, cfg.delta)
        z = None
        for _ in range(cfg.outer_iters):
            zf, z, it = dr_iterate(y, mask, frame, w, inner, z0=z)
            total += it
            w = 1.0 / (np.abs(zf) + cfg.eps)
            weights.append(w)
        x = snap_to_gamma(frame.synthesize(zf), mask, y)
    elif variant == "analysis":
        _check_cp(cp, frame)
        inner = CPConfig(cp.zeta, cp.sigma, cp.rho, cfg.inner_iters, cfg.delta)
        x, v = None, None
        for _ in range(cfg.outer_iters):
            x, v, it = cp_iterate(y, mask, frame, w, inner, x0=x, v0=v)
            total += it
            w = 1.0 / (np.abs(frame.analyze(x)) + cfg.eps)
            weights.append(w)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return Restoration(x, total, {"weights": weights})


# --------------------------------------------------------------------------
# Condat-Vu, blockwise

def _check_cv(cfg):
    if not cfg.sigma < 1.0 / cfg.tau - 0.5:
        warnings.warn("sigma >= 1/tau - 1/2: Condat-Vu convergence not guaranteed",
                      ConvergenceWarning, stacklevel=3)


def cv_blocks(y, mask, frame, w, cfg=CVConfig(), history=None):
    """Condat-Vu on a stack of blocks; returns coefficients ``(T, P)``.

    ``history`` (a list) receives the largest coefficient norm per iteration
    (used as a divergence monitor).
    """
    _check_cv(cfg)
    y = np.atleast_2d(y)
    R = mask.reliable.astype(float)
    yR = R * y
    z = frame.analyze(y)
    Dz = frame.synthesize(z)
    u = np.zeros_like(y)
    thresh = cfg.tau * cfg.lam * w
    # D is linear, so D z is tracked alongside z: one synthesis per iteration
    for _ in range(cfg.max_iters):
        zt = soft_threshold(z - cfg.tau * frame.analyze(R * Dz - yR + u), thresh)
        Dzt = frame.synthesize(zt)
        p = u + cfg.sigma * (2 * Dzt - Dz)
        ut = p - cfg.sigma * project_clipped(p / cfg.sigma, mask)
        u = cfg.rho * ut + (1 - cfg.rho) * u
        z = cfg.rho * zt + (1 - cfg.rho) * z
        Dz = cfg.rho * Dzt + (1 - cfg.rho) * Dz
        if history is not None:
            history.append(float(np.max(np.linalg.norm(z, axis=-1))))
    return z


def cv_declip(y, mask, plan=BlockPlan(1024, 256, "hann"), weights="unit", cfg=CVConfig(),
              redundancy=2, replace_reliable=False):
    """CSL1 (``weights="unit"``) / PWCSL1 (``weights="parabola"``) declipping.

    Blocks are cut without analysis window, processed with a twice redundant
    block DFT and reassembled by overlap-add.  Reliable samples are kept as
    estimated unless ``replace_reliable``.
    """
    y = np.asarray(y, dtype=np.float64)
    spec = TransformSpec("block-dft", "rectangular", plan.block_length, plan.hop,
                         redundancy * plan.block_length)
    frame = spec.assemble()
    P = frame.n_coef
    if weights == "unit":
        w = np.ones(P)
    elif weights == "parabola":
        w = parabola_weights(P, conjugate_symmetric=True)
    else:
        w = np.asarray(weights, dtype=float)
    bm = plan.split_mask(mask)
    hist = []
    z = cv_blocks(split_blocks(y, plan), bm, frame, w, cfg, history=hist)
    x = overlap_add(frame.synthesize(z), plan, y.size)
    if replace_reliable:
        x[mask.reliable] = y[mask.reliable]
    return Restoration(x, cfg.max_iters, {"max_coef_norm": max(hist) if hist else 0.0})
