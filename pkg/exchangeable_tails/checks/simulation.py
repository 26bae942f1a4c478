"""Monte Carlo against the quadrature oracle, plus the structural diagnostics."""

from __future__ import annotations

import logging
import math

from scipy import special

from exchangeable_tails.model import EnvelopeForm
from exchangeable_tails.quadrature import bound_exp, bound_power, mixture_tail
from exchangeable_tails.registry import CheckOutcome
from exchangeable_tails.simulate import (
    clopper_pearson,
    conditional_moments_check,
    empirical_measure_check,
    exchangeability_check,
    mc_tail_grid,
)

log = logging.getLogger(__name__)

_CENTERING_Q = (0.5, 1.0, 2.0)
_CENTERING_DRAWS = 100_000
_EMPIRICAL_SHARE = 0.99


def _oracle(cfg, t: float) -> float:
    law = cfg.law()
    if cfg.fixed_q is not None:
        return math.exp(law.log_tail(t, cfg.fixed_q))
    return mixture_tail(cfg.mixing(), law, t, cfg.rel_tol).value


def _bound(cfg, t: float) -> float:
    env = cfg.law().envelope()
    if cfg.fixed_q is not None:
        return float(env(t, cfg.fixed_q))
    fn = bound_exp if env.form is EnvelopeForm.INVERSE_POWER else bound_power
    return fn(cfg.mixing(), env, t, cfg.rel_tol).value


def _mc(cfg) -> CheckOutcome:
    """n-independence, oracle containment and domination by the mixture bound."""
    model = cfg.model()
    ts = cfg.t_grid()
    grid = {n: mc_tail_grid(model, n, ts, cfg.trials, cfg.seed, cfg.workers) for n in cfg.n_list}
    problems, rows = [], []
    for j, t in enumerate(ts):
        oracle = _oracle(cfg, t)
        bound = _bound(cfg, t) if t >= 1 else math.nan
        ests = [grid[n][j] for n in cfg.n_list]
        if max(e.ci_low for e in ests) > min(e.ci_high for e in ests):
            problems.append(f"t={t:g}: intervals over n do not overlap")
        for n, est in zip(cfg.n_list, ests):
            lo, hi = clopper_pearson(est.successes, est.trials, cfg.gate_alpha)
            if not lo <= oracle <= hi:
                problems.append(f"n={n} t={t:g}: oracle {oracle:.6g} outside [{lo:.6g}, {hi:.6g}]")
            if t >= 1 and est.ci_low > bound:
                problems.append(f"n={n} t={t:g}: ci_low {est.ci_low:.6g} above bound {bound:.6g}")
            rows.append({"n": n, "t": t, "p_hat": est.p_hat, "oracle": oracle, "bound": bound})
    return CheckOutcome(
        "mc",
        not problems,
        "; ".join(problems) or f"{len(rows)} (n, t) cells consistent with the oracle and below the bound",
        {"rows": rows, "problems": problems},
    )


def _centering(cfg) -> CheckOutcome:
    model = cfg.model()
    qs = (cfg.fixed_q,) if cfg.fixed_q is not None else _CENTERING_Q
    rows = []
    for q in qs:
        mean, se, ok = conditional_moments_check(model, q, _CENTERING_DRAWS, cfg.seed)
        rows.append({"q": q, "mean": mean, "se": se, "passed": ok})
    return CheckOutcome(
        "centering",
        all(r["passed"] for r in rows),
        ", ".join(f"q={r['q']:g}: {r['mean']:.2e} +- {r['se']:.1e}" for r in rows),
        {"rows": rows},
    )


def _exchangeability(cfg) -> CheckOutcome:
    cells = len(cfg.exch_edges) + 1
    comparisons = 3 * cells**cfg.exch_n
    z_limit = max(4.0, float(special.ndtri(1.0 - cfg.gate_alpha / (2.0 * comparisons))))
    rep = exchangeability_check(
        cfg.model(), cfg.exch_n, cfg.exch_edges, cfg.exch_trials, cfg.seed,
        workers=cfg.workers, z_limit=z_limit,
    )
    log.debug("exchangeability z=%s limit %.3f", rep.max_z, z_limit)
    return CheckOutcome(
        "exchangeability",
        rep.passed,
        f"max studentized cell difference {max(rep.max_z):.3f} (limit {z_limit:.3f}), "
        f"total variation {max(rep.tv_distances):.2e}",
        {
            "permutations": [list(p) for p in rep.permutations],
            "tv_distances": list(rep.tv_distances),
            "max_z": list(rep.max_z),
            "z_limit": z_limit,
        },
    )


def _empirical(cfg) -> CheckOutcome:
    rep = empirical_measure_check(cfg.model(), cfg.emp_interval, cfg.emp_n, cfg.emp_replications, cfg.seed)
    need = math.ceil(_EMPIRICAL_SHARE * rep.replications)
    return CheckOutcome(
        "empirical",
        rep.inside >= need,
        f"{rep.inside}/{rep.replications} replications inside the 4-sigma band (need {need})",
        {"inside": rep.inside, "replications": rep.replications, "max_deviation": rep.max_deviation},
    )


def register(reg):
    reg.register("mc", _mc)
    reg.register("centering", _centering)
    reg.register("exchangeability", _exchangeability)
    reg.register("empirical", _empirical)
