"""Quadrature against the closed-form asymptotics."""

from __future__ import annotations

import math

import numpy as np

from exchangeable_tails.asymptotics import (
    MatchVerdict,
    build_report,
    fit_power_exponent,
    laplace_constants,
    log_power_asym,
    power_decay_exponent,
    saddle_solve,
)
from exchangeable_tails.model import EnvelopeForm, MixingDensity, TailEnvelope
from exchangeable_tails.quadrature import bound_exp, bound_power
from exchangeable_tails.registry import CheckOutcome

_RATE_TOL = 0.01  # relative gap to the rate constant at the largest t
_RATIO_TOL = 0.03
_IDENTITY_DRAWS = 1000


def _convergence(cfg) -> CheckOutcome:
    m, e = cfg.mixing(), cfg.envelope()
    ts = cfg.asym_t_grid()
    if e.form is EnvelopeForm.INVERSE_POWER:
        c = laplace_constants(m, e)
        gaps = [abs(-bound_exp(m, e, t, cfg.rel_tol).log_value / t**c.rho - c.rate_constant) for t in ts]
        rel_last = gaps[-1] / c.rate_constant
        passed = rel_last <= _RATE_TOL and gaps[-1] < gaps[0]
        return CheckOutcome(
            "asymptotic",
            passed,
            f"-ln R0/t^rho within {rel_last:.3g} of the rate constant {c.rate_constant:.6g} at t={ts[-1]:g}",
            {"t": list(ts), "gaps": gaps, "rate_constant": c.rate_constant, "rho": c.rho},
        )

    logs = [bound_power(m, e, t, cfg.rel_tol).log_value for t in ts]
    ratios = [math.exp(log_power_asym(m, e, t) - lv) for t, lv in zip(ts, logs)]
    slope = fit_power_exponent(list(zip(ts, logs)))
    expected = power_decay_exponent(m, e)
    passed = abs(ratios[-1] - 1.0) <= _RATIO_TOL and abs(slope - expected) <= cfg.asym_match
    return CheckOutcome(
        "asymptotic",
        passed,
        f"power_asym/bound_power = {ratios[-1]:.5f} at t={ts[-1]:g}; "
        f"fitted exponent {slope:.4f} against {expected:.4f}",
        {"t": list(ts), "ratios": ratios, "fitted_exponent": slope, "expected_exponent": expected},
    )


def _prefactor(cfg) -> CheckOutcome:
    e = cfg.envelope()
    if e.form is not EnvelopeForm.INVERSE_POWER:
        return CheckOutcome("prefactor", True, "no prefactor to adjudicate for DirectPower", skipped=True)
    rep = build_report(cfg.mixing(), e, cfg.asym_t_grid(), cfg.rel_tol, cfg.asym_match)
    details = {
        "fitted_prefactor_exponent": rep.fitted_prefactor_exponent,
        "c11": rep.c11,
        "laplace_exponent": rep.prefactor_exponent_laplace,
        "fitted_rate": rep.fitted_rate,
        "rate_constant": rep.rate_constant,
        "match_verdict": rep.match_verdict.value,
    }
    return CheckOutcome(
        "prefactor",
        rep.match_verdict is not MatchVerdict.INCONCLUSIVE,
        f"fitted t-exponent {rep.fitted_prefactor_exponent:.4f} (c11 {rep.c11:.4f}, "
        f"Laplace {rep.prefactor_exponent_laplace:.4f}): verdict {rep.match_verdict.value}",
        details,
    )


def _identity(cfg) -> CheckOutcome:
    """c10 (1/A + 1/B) against the saddle-point rate constant on random families."""
    rng = np.random.default_rng(cfg.seed)
    worst_const, worst_saddle = 0.0, 0.0
    for _ in range(_IDENTITY_DRAWS):
        g, k, c3 = rng.uniform(-0.9, 3.0), rng.uniform(0.25, 4.0), rng.uniform(0.1, 10.0)
        c1, a, b = rng.uniform(0.1, 10.0), rng.uniform(0.5, 3.0), rng.uniform(0.25, 4.0)
        m = MixingDensity(g, k, c3)
        e = TailEnvelope(EnvelopeForm.INVERSE_POWER, c1, a, b)
        c = laplace_constants(m, e)
        lhs = c.c10 * (1.0 / c.A + 1.0 / c.B)
        worst_const = max(worst_const, abs(lhs / c.rate_constant - 1.0))
        sol = saddle_solve(e, m, 1.0)
        worst_saddle = max(worst_saddle, abs(sol.phi_star / c.rate_constant - 1.0))
    passed = worst_const <= 1e-12 and worst_saddle <= 1e-10
    return CheckOutcome(
        "identity",
        passed,
        f"{_IDENTITY_DRAWS} draws: constants agree to {worst_const:.2g}, saddle value to {worst_saddle:.2g}",
        {"constants": worst_const, "saddle": worst_saddle},
    )


def register(reg):
    reg.register("asymptotic", _convergence)
    reg.register("prefactor", _prefactor)
    reg.register("identity", _identity)
