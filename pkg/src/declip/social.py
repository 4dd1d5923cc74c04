"""Social-sparsity declipping: ISTA with social shrinkage and lambda continuation.

Minimises

    1/2 ||M_R (D z - y)||^2 + 1/2 ||h(M_H D z - theta)||^2
        + 1/2 ||h(-M_L D z - theta)||^2 + lam R(z)

over Gabor coefficients ``z``, where ``h = min(., 0)`` and the proximal step
of ``R`` is replaced by one of the shrinkers L / EW / WGL / PEW.  The output
is the synthesised last iterate; it is not projected onto Gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import DESK_GABOR, Frame
from .shrinkage import SOCIAL_KINDS, Neighborhood, hinge, shrink_social
from .signal import Restoration, distance_to_gamma

DIVERGENCE_FACTOR = 100.0


def default_lambdas():
    return tuple(np.logspace(-1, -4, 20))


@dataclass(frozen=True)
class SocialConfig:
    kind: str = "PEW"
    lambdas: tuple = field(default_factory=default_lambdas)
    inner_iters: int = 500
    nb: Neighborhood = Neighborhood(3, 7)
    delta: float = 1e-3
    extrapolate: bool = True

    def __post_init__(self):
        if self.kind not in SOCIAL_KINDS:
            raise ValueError(f"unknown shrinkage kind {self.kind!r}")
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) >= 0):
            raise ValueError("lambda schedule must be positive and strictly decreasing")


def time_residual(x, y, mask):
    """Gradient of the smooth part with respect to the time signal ``x = D z``."""
    th = mask.theta_c
    r = np.where(mask.reliable, x - y, 0.0)
    r = r + np.where(mask.high, hinge(x - th), 0.0)
    # d/dx 1/2 h(-x - theta)^2 = -h(-x - theta)
    r = r - np.where(mask.low, hinge(-x - th), 0.0)
    return r


def smooth_objective(z, y, mask, frame):
    x = frame.synthesize(z)
    th = mask.theta_c
    return 0.5 * float(
        np.sum((x - y)[mask.reliable] ** 2)
        + np.sum(hinge(x[mask.high] - th) ** 2)
        + np.sum(hinge(-x[mask.low] - th) ** 2)
    )


def social_gradient(z, y, mask, frame):
    """Gradient of the smooth part: one synthesis and one analysis."""
    return frame.analyze(time_residual(frame.synthesize(z), y, mask))


def _step_size(frame):
    if frame.is_parseval:
        return 1.0
    # ||D D*|| by power iteration for non-tight frames
    v = np.random.default_rng(0).standard_normal(frame.length)
    for _ in range(50):
        v = frame.synthesize(frame.analyze(v))
        nrm = np.linalg.norm(v)
        v /= nrm
    return 1.0 / nrm


def social_declip(y, mask, spec=DESK_GABOR, cfg=SocialConfig(), history=None):
    """ISTA/FISTA social-sparsity declipper.

    ``history`` (a list) receives one ``(stage, objective)`` pair per
    iteration for kind ``L`` (smooth part + lam * l1), otherwise the smooth
    part only.
    """
    y = np.asarray(y, dtype=np.float64)
    frame = spec if isinstance(spec, Frame) else spec.assemble(y.size)
    step = _step_size(frame)
    sym = frame.spec.conjugate_pairs
    nb = cfg.nb if cfg.kind in ("WGL", "PEW") else None
    zhat = np.zeros(frame.shape, dtype=complex)
    xhat = np.zeros_like(y)
    ref = max(np.linalg.norm(frame.analyze(y)), 1e-12)
    total = 0
    aborted = 0
    for stage, lam in enumerate(cfg.lambdas):
        z, xz = zhat, xhat
        for k in range(1, cfg.inner_iters + 1):
            g = frame.analyze(time_residual(xz, y, mask))
            znew = shrink_social(z - step * g, lam * step, cfg.kind, nb, conjugate_symmetric=sym)
            xnew = frame.synthesize(znew)
            total += 1
            if not np.isfinite(xnew).all() or np.linalg.norm(znew) > DIVERGENCE_FACTOR * ref:
                aborted += 1
                break
            change = np.linalg.norm(xnew - xhat)
            gamma = (k - 1) / (k + 5) if cfg.extrapolate else 0.0
            z = znew + gamma * (znew - zhat)
            xz = xnew + gamma * (xnew - xhat)
            zhat, xhat = znew, xnew
            if history is not None:
                obj = smooth_objective(zhat, y, mask, frame)
                if cfg.kind == "L":
                    obj += lam * float(np.sum(np.abs(zhat)))
                history.append((stage, obj))
            if change < cfg.delta:
                break
    notes = {"distance_to_gamma": distance_to_gamma(xhat, mask, y), "aborted_stages": aborted}
    return Restoration(xhat, total, notes)
