"""Command-line front end: bound, asym, simulate, verify and sweep."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from exchangeable_tails.asymptotics import (
    exp_asym,
    laplace_constants,
    log_power_asym,
    power_asym,
    power_decay_exponent,
)
from exchangeable_tails.constants import (
    EXIT_CONFIG,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    SWEEP_CAP,
)
from exchangeable_tails.errors import (
    BudgetExceededError,
    ConfigError,
    DomainError,
    IllConditionedError,
    NonConvergenceError,
)
from exchangeable_tails.model import EnvelopeForm
from exchangeable_tails.quadrature import bound_exp, bound_power
from exchangeable_tails.registry import REGISTRY, CheckRegistry
from exchangeable_tails.runconfig import RunConfig, check_names, load_config, with_params
from exchangeable_tails.simulate import mc_tail_grid

log = logging.getLogger(__name__)

BOUND_HEADER = ("t", "log_bound", "bound", "tol_achieved")
ASYM_HEADER = ("t", "value_paper", "value_laplace", "rate_exponent", "rate_constant", "c10", "c11", "A", "B")
SIMULATE_HEADER = ("n", "t", "p_hat", "ci_low", "ci_high", "trials", "seed")


@dataclass(slots=True)
class Table:
    header: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)


def _fmt(v: Any) -> str:
    # repr is the shortest string that reads back to the same double
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(table: Table, out: Optional[str] = None) -> None:
    if out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(table.header)
        w.writerows([_fmt(v) for v in row] for row in table.rows)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        w.writerows([_fmt(v) for v in row] for row in table.rows)
    log.info("wrote %d rows to %s", len(table.rows), path)


# ---------- commands ----------
def cmd_bound(cfg: RunConfig) -> Table:
    cfg.require_bound_domain()
    m, e = cfg.mixing(), cfg.envelope()
    fn = bound_exp if e.form is EnvelopeForm.INVERSE_POWER else bound_power
    log.info("bound: %s envelope on %d t values", e.form.value, len(cfg.t_grid()))
    table = Table(BOUND_HEADER)
    for t in cfg.t_grid():
        res = fn(m, e, t, cfg.rel_tol)
        table.rows.append((t, res.log_value, res.value, res.rel_tol_achieved))
    return table


def cmd_asym(cfg: RunConfig) -> Table:
    cfg.require_bound_domain()
    m, e = cfg.mixing(), cfg.envelope()
    log.info("asym: %s envelope on %d t values", e.form.value, len(cfg.t_grid()))
    table = Table(ASYM_HEADER)
    if e.form is EnvelopeForm.DIRECT_POWER:
        rate = power_decay_exponent(m, e)
        constant = math.exp(log_power_asym(m, e, 1.0))
        for t in cfg.t_grid():
            v = power_asym(m, e, t)
            table.rows.append((t, v, v, rate, constant, math.nan, math.nan, math.nan, math.nan))
        return table
    c = laplace_constants(m, e)
    for t in cfg.t_grid():
        a = exp_asym(m, e, t)
        table.rows.append(
            (t, a.value_paper, a.value_laplace, c.rho, c.rate_constant, c.c10, c.c11, c.A, c.B)
        )
    return table


def cmd_simulate(cfg: RunConfig) -> Table:
    model = cfg.model()
    ts = cfg.t_grid()
    log.info("simulate: n in %s, %d thresholds, %d trials, seed %d, %d workers",
             list(cfg.n_list), len(ts), cfg.trials, cfg.seed, cfg.workers)
    table = Table(SIMULATE_HEADER)
    for n in cfg.n_list:
        for t, est in zip(ts, mc_tail_grid(model, n, ts, cfg.trials, cfg.seed, cfg.workers)):
            table.rows.append((n, t, est.p_hat, est.ci_low, est.ci_high, est.trials, est.seed))
    return table


def cmd_verify(cfg: RunConfig, registry: Optional[CheckRegistry] = None) -> Dict[str, Any]:
    """Run the configured checks; the summary's ``passed`` is true iff nothing failed."""
    reg = registry or REGISTRY
    names = check_names(cfg, reg.list_checks())
    outcomes = []
    for name in names:
        log.info("verify: running %s", name)
        outcomes.append(reg.run(name, cfg))
    failures = [o.name for o in outcomes if not o.passed]
    verdict = next(
        (o.details.get("match_verdict") for o in outcomes if o.name == "prefactor" and not o.skipped),
        None,
    )
    return {
        "passed": not failures,
        "failures": failures,
        "match_verdict": verdict,
        "checks": [o.as_dict() for o in outcomes],
    }


def format_report(summary: Dict[str, Any]) -> str:
    lines = []
    for c in summary["checks"]:
        tag = "SKIP" if c["skipped"] else ("PASS" if c["passed"] else "FAIL")
        lines.append(f"{tag} {c['name']}: {c['message']}")
    if summary["match_verdict"] is not None:
        lines.append(f"prefactor verdict: {summary['match_verdict']}")
    if summary["failures"]:
        lines.append(f"FAILED: {', '.join(summary['failures'])}")
    else:
        lines.append(f"all {len(summary['checks'])} checks passed")
    return "\n".join(lines)


def cmd_sweep(cfg: RunConfig) -> Table:
    """cmd_bound joined with cmd_asym at every point of the parameter lattice."""
    size = cfg.lattice_size()
    if size > SWEEP_CAP:
        raise BudgetExceededError(f"sweep lattice has {size} points, the cap is {SWEEP_CAP}")
    cfg.require_bound_domain()
    names = [name for name, _ in cfg.sweep]
    points = list(cfg.lattice())
    log.info("sweep: %d lattice points over %s", size, names or "(none)")

    def one(params: Dict[str, float]) -> List[tuple]:
        point = with_params(cfg, params)
        bound, asym = cmd_bound(point), cmd_asym(point)
        prefix = tuple(params[n] for n in names)
        return [prefix + tuple(b) + tuple(a[1:]) for b, a in zip(bound.rows, asym.rows)]

    if cfg.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(one, points))
    else:
        chunks = [one(p) for p in points]
    return Table(tuple(names) + BOUND_HEADER + ASYM_HEADER[1:], [r for chunk in chunks for r in chunk])


# ---------- entry point ----------
def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=None, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed (unsigned 64-bit)")
    p.add_argument("--out", default=None, help="output path; stdout when omitted")
    p.add_argument("--rel-tol", type=float, default=None, help="quadrature relative tolerance")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    p.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo blocks and sweeps")
    g = p.add_mutually_exclusive_group()
    g.add_argument("-v", "--verbose", action="store_true")
    g.add_argument("-q", "--quiet", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exchangeable-tails",
        description="Tail bounds for normalized sums of exchangeable random variables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    sub.add_parser("bound", parents=[common], help="mixture tail bound on the t-grid")
    sub.add_parser("asym", parents=[common], help="closed-form asymptotics and constants")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo tail estimates over (n, t)")
    sub.add_parser("verify", parents=[common], help="run the verification checks")
    sub.add_parser("sweep", parents=[common], help="bound and asym over a parameter lattice")
    return parser


_COMMANDS = {"bound": cmd_bound, "asym": cmd_asym, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="[%(name)s] %(levelname)s %(message)s", stream=sys.stderr)

    try:
        cfg = load_config(
            args.config,
            {"seed": args.seed, "trials": args.trials, "workers": args.workers,
             "rel_tol": args.rel_tol, "out": args.out},
        )
        if args.command == "verify":
            summary = cmd_verify(cfg)
            print(format_report(summary))
            if cfg.out:
                path = Path(cfg.out)
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(summary, indent=2, default=str) + "\n", encoding="utf-8")
                log.info("wrote summary to %s", path)
            return EXIT_OK if summary["passed"] else EXIT_VERIFY_FAILED
        write_csv(_COMMANDS[args.command](cfg), cfg.out)
    except (ConfigError, BudgetExceededError, DomainError, OverflowError) as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except (NonConvergenceError, IllConditionedError) as e:
        log.error("numerical failure: %s", e)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
