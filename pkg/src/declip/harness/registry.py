"""Method registry: abbreviation -> solver entry point, default config, consistency class.

Defaults are desk-scale presets (short signals, one CPU).  Every entry runs
``fn(y, mask, cfg)`` and returns a :class:`~declip.signal.Restoration`.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Callable

import numpy as np

from ..dictlearn import DLConfig, dl_declip
from ..frames import DESK_GABOR, BlockPlan
from ..janssen import JanssenConfig, janssen_declip
from ..l1 import (
    CPConfig, CVConfig, DRConfig, ReweightConfig, cp_declip, cv_declip, dr_declip,
    parabola_weights, reweighted_declip,
)
from ..nmf import NMFConfig, nmf_declip
from ..omp import OMPConfig, comp_declip
from ..social import SocialConfig, social_declip
from ..spade import SpadeConfig, spade_declip

#: consistency classes of the clipped part and of the reliable part
CLASSES = ("yes", "approximate", "no")

BLOCKS = BlockPlan(1024, 256, "hann")
DL_BLOCKS = BlockPlan(512, 128, "hann")
NMF_BLOCKS = BlockPlan(512, 256, "sine", analysis_window=True)
JANSSEN_BLOCKS = BlockPlan(2048, 512, "hann")


@dataclass(frozen=True)
class Method:
    name: str
    full_name: str
    fn: Callable
    config: Any
    clipped_class: str
    reliable_class: str
    # notes keys whose positive value means the solver reported a failure to
    # reach its consistent answer (exempts "yes" classes from certification)
    failure_notes: tuple = ()

    def run(self, y, mask, cfg=None):
        return self.fn(y, mask, self.config if cfg is None else cfg)

    def configure(self, overrides):
        """Default config with ``{field: value}`` overrides applied."""
        if not overrides:
            return self.config
        known = {f.name for f in fields(self.config)}
        bad = sorted(set(overrides) - known)
        if bad:
            raise KeyError(f"{self.name}: unknown config field(s) {', '.join(bad)}")
        return replace(self.config, **overrides)


def _gabor(y):
    return DESK_GABOR.assemble(np.asarray(y).size)


def _parabola(frame):
    F, T = frame.shape
    return parabola_weights(F, T, conjugate_symmetric=True)


def _pw_dr(y, m, c):
    frame = _gabor(y)
    return dr_declip(y, m, frame, _parabola(frame), c)


def _pw_cp(y, m, c):
    frame = _gabor(y)
    return cp_declip(y, m, frame, _parabola(frame), c)


_METHODS = [
    Method("C-OMP", "Constrained Orthogonal Matching Pursuit",
           lambda y, m, c: comp_declip(y, m, BLOCKS, c), OMPConfig(), "yes", "no",
           ("fallback_blocks",)),
    Method("S-SPADE", "Synthesis SParse Audio DEclipper",
           lambda y, m, c: spade_declip(y, m, BLOCKS, "synthesis", c), SpadeConfig(), "yes", "yes"),
    Method("A-SPADE", "Analysis SParse Audio DEclipper",
           lambda y, m, c: spade_declip(y, m, BLOCKS, "analysis", c), SpadeConfig(), "yes", "yes"),
    Method("l1 DR", "l1 minimization, Douglas-Rachford (synthesis)",
           lambda y, m, c: dr_declip(y, m, _gabor(y), None, c), DRConfig(max_iters=500), "yes", "yes"),
    Method("l1 CP", "l1 minimization, Chambolle-Pock (analysis)",
           lambda y, m, c: cp_declip(y, m, _gabor(y), None, c), CPConfig(max_iters=500), "yes", "yes"),
    Method("Rl1CC DR", "Reweighted l1 with clipping constraints, Douglas-Rachford",
           lambda y, m, c: reweighted_declip(y, m, _gabor(y), "synthesis", c), ReweightConfig(),
           "yes", "yes"),
    Method("Rl1CC CP", "Reweighted l1 with clipping constraints, Chambolle-Pock",
           lambda y, m, c: reweighted_declip(y, m, _gabor(y), "analysis", c), ReweightConfig(),
           "yes", "yes"),
    Method("SS EW", "Social sparsity, empirical Wiener",
           lambda y, m, c: social_declip(y, m, DESK_GABOR, c), SocialConfig(kind="EW"),
           "approximate", "approximate"),
    Method("SS PEW", "Social sparsity, persistent empirical Wiener",
           lambda y, m, c: social_declip(y, m, DESK_GABOR, c), SocialConfig(kind="PEW"),
           "approximate", "approximate"),
    Method("CSL1", "Compressed-sensing l1 (Condat-Vu)",
           lambda y, m, c: cv_declip(y, m, BLOCKS, "unit", c), CVConfig(), "approximate", "no"),
    Method("PWCSL1", "Parabola-weighted compressed-sensing l1 (Condat-Vu)",
           lambda y, m, c: cv_declip(y, m, BLOCKS, "parabola", c), CVConfig(max_iters=1500),
           "approximate", "no"),
    Method("PWl1 DR", "Parabola-weighted l1, Douglas-Rachford (synthesis)",
           _pw_dr, DRConfig(max_iters=500), "yes", "yes"),
    Method("PWl1 CP", "Parabola-weighted l1, Chambolle-Pock (analysis)",
           _pw_cp, CPConfig(max_iters=500), "yes", "yes"),
    Method("DL", "Dictionary learning with consistent IHT",
           lambda y, m, c: dl_declip(y, m, DL_BLOCKS, c), DLConfig(n_atoms=1024, eps=0.05, k_step=4),
           "approximate", "approximate"),
    Method("NMF", "Itakura-Saito NMF with Wiener posterior",
           lambda y, m, c: nmf_declip(y, m, NMF_BLOCKS, c), NMFConfig(), "yes", "yes",
           ("capped_blocks",)),
    Method("Janssen", "Autoregressive interpolation",
           lambda y, m, c: janssen_declip(y, m, JANSSEN_BLOCKS, c), JanssenConfig(), "no", "yes"),
]

REGISTRY = {m.name: m for m in _METHODS}
assert len(REGISTRY) == len(_METHODS), "method names must be unique"


def get_method(name):
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown method {name!r}; known: {', '.join(REGISTRY)}") from None


def certify(method, notes, consistent_reliable, consistent_clipped):
    """Check the consistency flags of one output against the method's class.

    A "yes" class requires the flag to hold unless the solver reported a
    failure in one of ``method.failure_notes``.  "approximate" and "no"
    classes accept either value.
    """
    failed = any(notes.get(k, 0) for k in method.failure_notes)
    ok = True
    for cls, flag in ((method.clipped_class, consistent_clipped),
                      (method.reliable_class, consistent_reliable)):
        if cls == "yes" and not flag and not failed:
            ok = False
    return ok
