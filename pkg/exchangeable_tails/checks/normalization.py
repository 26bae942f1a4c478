from __future__ import annotations

import itertools

from exchangeable_tails.model import MixingDensity
from exchangeable_tails.quadrature import normalization
from exchangeable_tails.registry import CheckOutcome

_TOL = 1e-8  # relative


def _check(cfg) -> CheckOutcome:
    families = [cfg.mixing()]
    families += [MixingDensity(g, k, c) for g, k, c in itertools.product(*cfg.normalization_grid)]
    worst, failing = 0.0, []
    for m in families:
        err = abs(normalization(m, min(cfg.rel_tol, 1e-10)).value - 1.0)
        worst = max(worst, err)
        if err > _TOL:
            failing.append({"gamma": m.gamma, "kappa": m.kappa, "c3": m.c3, "error": err})
    return CheckOutcome(
        "normalization",
        not failing,
        f"{len(families)} mixing densities, worst |integral - 1| = {worst:.3g}",
        {"families": len(families), "worst_error": worst, "failing": failing},
    )


def register(reg):
    reg.register("normalization", _check)
