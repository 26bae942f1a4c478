"""Run configuration: CONFIG defaults, a JSON file, then command-line flags."""

from __future__ import annotations

import copy
import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from exchangeable_tails.config import CONFIG, SECTIONS, SWEEPABLE
from exchangeable_tails.constants import MAX_REL_TOL, MIN_REL_TOL
from exchangeable_tails.errors import ConfigError, DomainError
from exchangeable_tails.model import (
    ConditionalLaw,
    EnvelopeForm,
    LawFamily,
    MixingDensity,
    TailEnvelope,
)
from exchangeable_tails.simulate import DeFinettiModel

_FLAG_KEYS = {
    "seed": ("mc", "seed"),
    "trials": ("mc", "trials"),
    "workers": ("mc", "workers"),
    "rel_tol": ("tolerances", "quadrature"),
}


@dataclass(frozen=True, slots=True)
class RunConfig:
    gamma: float
    kappa: float
    c3: float
    form: EnvelopeForm
    c1: float
    alpha: float
    beta: float
    family: LawFamily
    fixed_q: Optional[float]
    t_min: float
    t_max: float
    points: int
    t_values: Optional[Tuple[float, ...]]
    n_list: Tuple[int, ...]
    trials: int
    seed: int
    workers: int
    gate_alpha: float
    rel_tol: float
    asym_match: float
    asym_grid: Tuple[float, float, int]
    normalization_grid: Tuple[Tuple[float, ...], Tuple[float, ...], Tuple[float, ...]]
    lemma_theta: Tuple[float, ...]
    lemma_p: Tuple[float, ...]
    lemma_t: Tuple[float, ...]
    exch_n: int
    exch_edges: Tuple[float, ...]
    exch_trials: int
    emp_interval: Tuple[float, float]
    emp_n: int
    emp_replications: int
    sweep: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()
    checks: Optional[Tuple[str, ...]] = None
    out: Optional[str] = None
    source: str = field(default="", repr=False, compare=False)

    # ---------- model objects ----------
    def mixing(self) -> MixingDensity:
        return MixingDensity(self.gamma, self.kappa, self.c3)

    def envelope(self) -> TailEnvelope:
        return TailEnvelope(self.form, self.c1, self.alpha, self.beta)

    def law(self) -> ConditionalLaw:
        return ConditionalLaw(self.family)

    def model(self) -> DeFinettiModel:
        return DeFinettiModel(self.mixing(), self.law(), self.fixed_q)

    # ---------- grids ----------
    def t_grid(self) -> Tuple[float, ...]:
        if self.t_values is not None:
            return self.t_values
        return geometric(self.t_min, self.t_max, self.points)

    def asym_t_grid(self) -> Tuple[float, ...]:
        return geometric(*self.asym_grid)

    def lattice(self):
        names = [name for name, _ in self.sweep]
        for combo in itertools.product(*(values for _, values in self.sweep)):
            yield dict(zip(names, combo))

    def lattice_size(self) -> int:
        return math.prod(len(values) for _, values in self.sweep) if self.sweep else 1

    def require_bound_domain(self) -> None:
        """Bounds and asymptotics are stated for t >= 1."""
        if min(self.t_grid()) < 1:
            raise ConfigError(
                f"bound/asym commands need every t >= 1, got t = {min(self.t_grid())}",
                line_of(self.source, "grid", "t_values" if self.t_values else "t_min"),
            )


def geometric(t_min: float, t_max: float, points: int) -> Tuple[float, ...]:
    if points == 1:
        return (float(t_min),)
    return tuple(float(t) for t in np.geomspace(t_min, t_max, points))


def line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of ``"section"`` (then ``"key"`` after it) in JSON text."""
    if not text:
        return None
    m = re.search(rf'"{re.escape(section)}"\s*:', text)
    if m is None:
        return None
    pos = m.start()
    if key is not None:
        k = re.compile(rf'"{re.escape(key)}"\s*:').search(text, m.end())
        if k is not None:
            pos = k.start()
    return text.count("\n", 0, pos) + 1


def _merge(base: Dict[str, Any], user: Dict[str, Any], text: str) -> None:
    for section, value in user.items():
        if section not in base:
            raise ConfigError(f"unknown top-level key {section!r}", line_of(text, section))
        if section not in SECTIONS:
            base[section] = value
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{section!r} must be an object", line_of(text, section))
        if section == "sweep":
            base[section] = dict(value)
            continue
        for key, v in value.items():
            if key not in base[section]:
                raise ConfigError(f"unknown key {section}.{key}", line_of(text, section, key))
            base[section][key] = v


def _floats(values: Any, where: str, line: Optional[int]) -> Tuple[float, ...]:
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(f"{where} must be a non-empty list of numbers", line)
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must contain numbers only", line) from None


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    data = copy.deepcopy(CONFIG)
    text = ""
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        try:
            user = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg}", e.lineno) from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object", 1)
        _merge(data, user, text)
    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        if flag == "out":
            data["out"] = value
        else:
            section, key = _FLAG_KEYS[flag]
            data[section][key] = value
    return _build(data, text)


def _build(d: Dict[str, Any], text: str) -> RunConfig:
    def line(section: str, key: Optional[str] = None) -> Optional[int]:
        return line_of(text, section, key)

    def num(section: str, key: str, kind=float):
        v = d[section][key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {v!r}", line(section, key))
        if kind is int and float(v) != int(v):
            raise ConfigError(f"{section}.{key} must be an integer, got {v!r}", line(section, key))
        return kind(v)

    mixing = {k: num("mixing", k) for k in ("gamma", "kappa", "c3")}
    try:
        MixingDensity(**mixing)
    except DomainError as e:
        raise ConfigError(str(e), line("mixing")) from None

    env = d["envelope"]
    try:
        form = EnvelopeForm(env["form"])
    except ValueError:
        raise ConfigError(f"envelope.form must be DirectPower or InversePower, got {env['form']!r}",
                          line("envelope", "form")) from None
    c1, alpha, beta = (num("envelope", k) for k in ("c1", "alpha", "beta"))
    try:
        TailEnvelope(form, c1, alpha, beta)
    except DomainError as e:
        raise ConfigError(str(e), line("envelope")) from None

    try:
        family = LawFamily(d["law"]["family"])
    except ValueError:
        raise ConfigError(f"law.family must be GaussianScale or GaussianPrecision, got {d['law']['family']!r}",
                          line("law", "family")) from None
    fixed_q = d["law"]["fixed_q"]
    if fixed_q is not None:
        fixed_q = num("law", "fixed_q")
        if not fixed_q > 0:
            raise ConfigError("law.fixed_q must be positive", line("law", "fixed_q"))

    t_min, t_max, points = num("grid", "t_min"), num("grid", "t_max"), num("grid", "points", int)
    if not (0 < t_min <= t_max and points >= 1):
        raise ConfigError("grid needs 0 < t_min <= t_max and points >= 1", line("grid"))
    t_values = d["grid"]["t_values"]
    if t_values is not None:
        t_values = _floats(t_values, "grid.t_values", line("grid", "t_values"))
        if any(t < 0 for t in t_values):
            raise ConfigError("grid.t_values must be non-negative", line("grid", "t_values"))
    n_list = _floats(d["grid"]["n_list"], "grid.n_list", line("grid", "n_list"))
    if any(n < 1 or n != int(n) for n in n_list):
        raise ConfigError("grid.n_list must hold positive integers", line("grid", "n_list"))

    trials, seed, workers = num("mc", "trials", int), num("mc", "seed", int), num("mc", "workers", int)
    if trials < 1 or workers < 1:
        raise ConfigError("mc.trials and mc.workers must be positive", line("mc"))
    if not 0 <= seed < 1 << 64:
        raise ConfigError("mc.seed must be an unsigned 64-bit integer", line("mc", "seed"))
    gate_alpha = num("mc", "gate_alpha")
    if not 0 < gate_alpha < 1:
        raise ConfigError("mc.gate_alpha must lie in (0, 1)", line("mc", "gate_alpha"))

    rel_tol, asym_match = num("tolerances", "quadrature"), num("tolerances", "asym_match")
    if not MIN_REL_TOL <= rel_tol <= MAX_REL_TOL:
        raise ConfigError(f"tolerances.quadrature must lie in [{MIN_REL_TOL}, {MAX_REL_TOL}]",
                          line("tolerances", "quadrature"))
    if not asym_match > 0:
        raise ConfigError("tolerances.asym_match must be positive", line("tolerances", "asym_match"))

    asym_grid = (num("asym", "t_min"), num("asym", "t_max"), num("asym", "points", int))
    if not (1 <= asym_grid[0] < asym_grid[1] and asym_grid[2] >= 2):
        raise ConfigError("asym grid needs 1 <= t_min < t_max and points >= 2", line("asym"))

    norm = d["normalization"]
    normalization_grid = tuple(
        _floats(norm[k], f"normalization.{k}", line("normalization", k)) for k in ("gamma", "kappa", "c3")
    )
    lemma = d["lemma"]
    lemma_theta = _floats(lemma["theta"], "lemma.theta", line("lemma", "theta"))
    lemma_p = _floats(lemma["p"], "lemma.p", line("lemma", "p"))
    lemma_t = _floats(lemma["t"], "lemma.t", line("lemma", "t"))

    exch = d["exchangeability"]
    exch_n, exch_trials = num("exchangeability", "n", int), num("exchangeability", "trials", int)
    exch_edges = _floats(exch["edges"], "exchangeability.edges", line("exchangeability", "edges"))

    emp = d["empirical"]
    bounds = emp["interval"]
    if not isinstance(bounds, (list, tuple)) or len(bounds) != 2:
        raise ConfigError("empirical.interval must be [a, b] (null for an infinite end)",
                          line("empirical", "interval"))
    a = -math.inf if bounds[0] is None else float(bounds[0])
    b = math.inf if bounds[1] is None else float(bounds[1])
    emp_n, emp_reps = num("empirical", "n", int), num("empirical", "replications", int)

    sweep = []
    for name, values in d["sweep"].items():
        if name not in SWEEPABLE:
            raise ConfigError(f"sweep parameter {name!r} is not one of {SWEEPABLE}", line("sweep", name))
        sweep.append((name, _floats(values, f"sweep.{name}", line("sweep", name))))

    checks = d["verify"]["checks"]
    if checks is not None:
        if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
            raise ConfigError("verify.checks must be a list of check names", line("verify", "checks"))
        checks = tuple(checks)

    return RunConfig(
        gamma=mixing["gamma"], kappa=mixing["kappa"], c3=mixing["c3"],
        form=form, c1=c1, alpha=alpha, beta=beta,
        family=family, fixed_q=fixed_q,
        t_min=t_min, t_max=t_max, points=points, t_values=t_values,
        n_list=tuple(int(n) for n in n_list),
        trials=trials, seed=seed, workers=workers, gate_alpha=gate_alpha,
        rel_tol=rel_tol, asym_match=asym_match, asym_grid=asym_grid,
        normalization_grid=normalization_grid,
        lemma_theta=lemma_theta, lemma_p=lemma_p, lemma_t=lemma_t,
        exch_n=exch_n, exch_edges=exch_edges, exch_trials=exch_trials,
        emp_interval=(a, b), emp_n=emp_n, emp_replications=emp_reps,
        sweep=tuple(sweep), checks=checks, out=d["out"], source=text,
    )


def with_params(cfg: RunConfig, params: Dict[str, float]) -> RunConfig:
    """A copy of ``cfg`` with sweep parameters replaced and re-validated."""
    new = replace(cfg, **params)
    try:
        new.mixing()
        new.envelope()
    except DomainError as e:
        raise ConfigError(f"sweep point {params}: {e}", line_of(cfg.source, "sweep")) from None
    return new


def check_names(cfg: RunConfig, available: Sequence[str]) -> Tuple[str, ...]:
    if cfg.checks is None:
        return tuple(available)
    unknown = [c for c in cfg.checks if c not in available]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; available: {list(available)}",
                          line_of(cfg.source, "verify", "checks"))
    return cfg.checks
