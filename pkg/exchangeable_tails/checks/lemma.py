from __future__ import annotations

import warnings

from exchangeable_tails.asymptotics import lemma41_ratio
from exchangeable_tails.errors import EndpointSingularityWarning
from exchangeable_tails.quadrature import AuxIntegralSpec
from exchangeable_tails.registry import CheckOutcome

_SLACK = 1e-10  # quadrature noise allowed above the Gamma(theta) t^-theta bound
_NEAR = 0.05  # ratio distance from 1 allowed at t = 1000


def _check(cfg) -> CheckOutcome:
    rows, problems = [], []
    for theta in cfg.lemma_theta:
        for p in cfg.lemma_p:
            spec = AuxIntegralSpec(theta, lambda x, p=p: x**p)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EndpointSingularityWarning)
                ratios = lemma41_ratio(spec, cfg.lemma_t)
            gaps = [1.0 - r for _, r in ratios]
            label = f"theta={theta:g} p={p:g}"
            if any(r > 1.0 + _SLACK for _, r in ratios):
                problems.append(f"{label}: ratio above 1")
            if any(b >= a for a, b in zip(gaps, gaps[1:])):
                problems.append(f"{label}: gap does not shrink")
            for t, r in ratios:
                if t == 1000.0 and abs(1.0 - r) > _NEAR:
                    problems.append(f"{label}: ratio {r:.4f} at t=1000")
            rows.append({"theta": theta, "p": p, "ratios": ratios})
    return CheckOutcome(
        "lemma",
        not problems,
        "; ".join(problems) or f"{len(rows)} (theta, g) pairs: ratios <= 1 and approaching 1",
        {"rows": rows, "problems": problems},
    )


def register(reg):
    reg.register("lemma", _check)
