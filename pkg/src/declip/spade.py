"""SParse Audio DEclipper, analysis (A-SPADE) and synthesis (S-SPADE) forms.

Both run an ADMM-type iteration per block with a hard-thresholding step whose
sparsity ``k`` grows by ``s`` every ``r`` iterations.  All blocks of a signal
are iterated together as one stacked array; finished blocks drop out of the
active set, so every iteration costs one (stacked) analysis and one synthesis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .frames import BlockPlan, FrameError, TransformSpec, overlap_add, split_blocks
from .shrinkage import hard_threshold_k
from .signal import ClipMask, Restoration, project_gamma, snap_to_gamma

VARIANTS = ("analysis", "synthesis")
EXTRA_ITERS = 200


@dataclass(frozen=True)
class SpadeConfig:
    s: int = 1
    r: int = 1
    epsilon: float = 0.1
    max_k: Optional[int] = None
    max_iters: Optional[int] = None

    def __post_init__(self):
        if self.s < 1 or self.r < 1:
            raise ValueError("s and r must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def k_schedule(i, cfg):
    """Sparsity used at (0-based) iteration ``i``."""
    return cfg.s * (1 + i // cfg.r)


def block_spec(plan, redundancy=2):
    return TransformSpec("block-dft", "rectangular", plan.block_length, plan.hop,
                         redundancy * plan.block_length)


def _rows(mask, idx):
    return ClipMask(mask.reliable[idx], mask.high[idx], mask.low[idx], mask.theta_c)


def spade_blocks(blocks, mask, frame, variant="analysis", cfg=SpadeConfig()):
    """Run SPADE on a stack of blocks (``n_blocks x block_length``).

    Returns ``(estimates, iterations_per_block, residuals)``.  Every row of
    the estimate lies in its block's feasible set.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown SPADE variant {variant!r}")
    if not frame.is_parseval:
        raise FrameError("SPADE needs a Parseval frame")
    y = np.atleast_2d(np.asarray(blocks, dtype=np.float64))
    T = y.shape[0]
    mask = ClipMask(np.atleast_2d(mask.reliable), np.atleast_2d(mask.high),
                    np.atleast_2d(mask.low), mask.theta_c)
    pairs = frame.spec.conjugate_pairs
    n_ind = frame.n_coef // 2 + 1 if pairs else frame.n_coef
    max_k = n_ind if cfg.max_k is None else min(cfg.max_k, n_ind)
    # k is held at max_k once reached; the iteration cap guarantees termination.
    max_iters = cfg.max_iters or cfg.r * (max_k // cfg.s + 1) + EXTRA_ITERS

    x = y.copy()
    iters = np.zeros(T, dtype=int)
    resid = np.zeros(T)
    # Blocks without clipped samples have the single feasible point y_t.
    active = np.flatnonzero(~mask.reliable.all(axis=1))
    if active.size == 0:
        return x, iters, resid
    m = _rows(mask, active)
    ya = y[active]
    xa = ya.copy()
    if variant == "analysis":
        Ax = frame.analyze(xa)
        u = np.zeros_like(Ax)
    else:
        u = np.zeros_like(xa)

    for i in range(max_iters):
        k = min(k_schedule(i, cfg), max_k)
        if variant == "analysis":
            zb = hard_threshold_k(Ax + u, k, pairs)
            xa = project_gamma(frame.synthesize(zb - u), m, ya)
            Ax = frame.analyze(xa)
            r = Ax - zb
            u = u + r
        else:
            zb = hard_threshold_k(frame.analyze(xa - u), k, pairs)
            Dz = frame.synthesize(zb)
            xa = project_gamma(Dz + u, m, ya)
            r = Dz - xa
            u = u + r
        res = np.linalg.norm(r, axis=1)
        iters[active] = i + 1
        resid[active] = res
        x[active] = xa
        done = res <= cfg.epsilon
        if done.all():
            break
        if done.any():
            keep = ~done
            active, xa, u, ya = active[keep], xa[keep], u[keep], ya[keep]
            m = _rows(m, keep)
            if variant == "analysis":
                Ax = Ax[keep]
    return x, iters, resid


def aspade_block(y_t, mask_t, frame, cfg=SpadeConfig()):
    x, it, res = spade_blocks(y_t, mask_t, frame, "analysis", cfg)
    return x[0], int(it[0]), float(res[0])


def sspade_block(y_t, mask_t, frame, cfg=SpadeConfig()):
    x, it, res = spade_blocks(y_t, mask_t, frame, "synthesis", cfg)
    return x[0], int(it[0]), float(res[0])


def spade_declip(y, mask, plan=BlockPlan(1024, 256, "hann"), variant="analysis",
                 cfg=SpadeConfig(), redundancy=2):
    """Blockwise SPADE followed by overlap-add.

    Blocks are taken without an analysis window (rectangular) and the
    reassembly uses the plan's window, so the output inherits exact
    consistency from the blocks.
    """
    if plan.analysis_window:
        raise ValueError("SPADE blocks must be cut without an analysis window")
    y = np.asarray(y, dtype=np.float64)
    frame = block_spec(plan, redundancy).assemble()
    est, iters, res = spade_blocks(split_blocks(y, plan), plan.split_mask(mask), frame, variant, cfg)
    # OLA is a convex combination per sample; only round-off can leave Gamma.
    out = snap_to_gamma(overlap_add(est, plan, y.size), mask, y)
    notes = {"max_block_iters": int(iters.max()), "max_residual": float(res.max()),
             "unconverged_blocks": int(np.sum(res > cfg.epsilon)),
             "n_analysis": frame.n_analysis, "n_synthesis": frame.n_synthesis}
    return Restoration(out, int(iters.sum()), notes)
