"""Leading-order behaviour of the mixture bounds and its numerical adjudication."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from exchangeable_tails.constants import DEFAULT_REL_TOL
from exchangeable_tails.errors import DomainError, FormMismatchError, IllConditionedError
from exchangeable_tails.model import EnvelopeForm, MixingDensity, TailEnvelope, log_gamma
from exchangeable_tails.quadrature import (
    AuxIntegralSpec,
    aux_integral,
    bound_exp,
    integrate_semiaxis,
)

log = logging.getLogger(__name__)

_COND_LIMIT = 1e12


class MatchVerdict(str, Enum):
    PAPER = "paper"
    LAPLACE = "laplace"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, slots=True)
class SaddleSolution:
    """Minimiser of phi(Q) = c1 t^alpha Q^-beta + c3 Q^kappa."""

    q_star: float
    phi_star: float
    phi2_star: float
    phi1_star: float

    @property
    def residual(self) -> float:
        return abs(self.phi1_star) * self.q_star / self.phi_star


@dataclass(frozen=True, slots=True)
class LaplaceConstants:
    rho: float
    A: float
    B: float
    c10: float
    c11: float
    laplace_exponent: float
    rate_constant: float
    prefactor_constant: float
    paper_prefactor_constant: float


@dataclass(frozen=True, slots=True)
class ExpAsymptotic:
    t: float
    log_value_paper: float
    log_value_laplace: float

    @property
    def value_paper(self) -> float:
        return math.exp(self.log_value_paper) if self.log_value_paper > -745 else 0.0

    @property
    def value_laplace(self) -> float:
        return math.exp(self.log_value_laplace) if self.log_value_laplace > -745 else 0.0


@dataclass(frozen=True, slots=True)
class AsymptoticReport:
    rate_exponent: float
    rate_constant: float
    prefactor_exponent_paper: float
    prefactor_exponent_laplace: float
    prefactor_constant: float
    A: float
    B: float
    c10: float
    fitted_rate: float
    fitted_prefactor_exponent: float
    match_verdict: MatchVerdict

    @property
    def c11(self) -> float:
        return self.prefactor_exponent_paper


def _require(e: TailEnvelope, form: EnvelopeForm, t: float) -> None:
    if e.form is not form:
        raise FormMismatchError(f"expected a {form.value} envelope, got {e.form.value}")
    if not t >= 1:
        raise DomainError(f"asymptotics are stated for t >= 1, got {t}")


# ---------- power decay ----------
def log_power_asym(m: MixingDensity, e: TailEnvelope, t: float) -> float:
    _require(e, EnvelopeForm.DIRECT_POWER, t)
    a = (m.gamma + 1.0) / e.beta
    return (
        -a * math.log(e.c1)
        + math.log(m.c2)
        - math.log(e.beta)
        + log_gamma(a)
        - e.alpha * a * math.log(t)
    )


def power_asym(m: MixingDensity, e: TailEnvelope, t: float) -> float:
    """c1^-(g+1)/b c2 b^-1 Gamma((g+1)/b) t^(-a(g+1)/b), the leading term of bound_power."""
    return math.exp(log_power_asym(m, e, t))


def power_decay_exponent(m: MixingDensity, e: TailEnvelope) -> float:
    return -e.alpha * (m.gamma + 1.0) / e.beta


def fit_power_exponent(points: Sequence[Tuple[float, float]]) -> float:
    """Slope of ln value against ln t for (t, ln value) pairs."""
    if len(points) < 2:
        raise DomainError("a slope needs at least two points")
    ts, lv = np.array(points, dtype=float).T
    return float(np.polyfit(np.log(ts), lv, 1)[0])


# ---------- saddle point ----------
def saddle_solve(e: TailEnvelope, m: MixingDensity, t: float) -> SaddleSolution:
    _require(e, EnvelopeForm.INVERSE_POWER, t)
    b, k = e.beta, m.kappa
    log_a = math.log(e.c1) + e.alpha * math.log(t)

    def derivs(q: float) -> Tuple[float, float, float]:
        lq = math.log(q)
        left = math.exp(log_a - b * lq)  # c1 t^alpha Q^-beta
        right = m.c3 * math.exp(k * lq)
        phi = left + right
        phi1 = (-b * left + k * right) / q
        phi2 = (b * (b + 1.0) * left + k * (k - 1.0) * right) / q**2
        return phi, phi1, phi2

    q = math.exp((math.log(b) + log_a - math.log(k) - math.log(m.c3)) / (b + k))
    phi, phi1, phi2 = derivs(q)
    if phi2 > 0:
        cand = min(max(q - phi1 / phi2, 0.5 * q), 2.0 * q)
        c_phi, c_phi1, c_phi2 = derivs(cand)
        if abs(c_phi1) < abs(phi1):
            q, phi, phi1, phi2 = cand, c_phi, c_phi1, c_phi2
    return SaddleSolution(q_star=q, phi_star=phi, phi2_star=phi2, phi1_star=phi1)


def rate_exponent(m: MixingDensity, e: TailEnvelope) -> float:
    return e.alpha * m.kappa / (e.beta + m.kappa)


def laplace_constants(m: MixingDensity, e: TailEnvelope) -> LaplaceConstants:
    if e.form is not EnvelopeForm.INVERSE_POWER:
        raise FormMismatchError("Laplace constants exist for InversePower envelopes only")
    b, k, g1 = e.beta, m.kappa, m.gamma + 1.0
    s = b + k
    A, B = b / g1, k / g1
    c10 = (e.c1**k * m.c3**b * b**k * k**b) ** (1.0 / s) / g1
    c11 = e.alpha * (2.0 * g1 - k) / (2.0 * s) - 1.0
    rate = (e.c1**k * m.c3**b) ** (1.0 / s) * b ** (-b / s) * k ** (-k / s) * s
    q0 = (b * e.c1 / (k * m.c3)) ** (1.0 / s)
    prefactor = m.c2 * q0 ** (g1 - k / 2.0) * math.sqrt(2.0 * math.pi / (m.c3 * k * s))
    return LaplaceConstants(
        rho=rate_exponent(m, e),
        A=A,
        B=B,
        c10=c10,
        c11=c11,
        laplace_exponent=c11 + 1.0,
        rate_constant=rate,
        prefactor_constant=prefactor,
        paper_prefactor_constant=math.sqrt(2.0 * math.pi) * m.c2 * c10 / math.sqrt(A + B),
    )


def exp_asym(m: MixingDensity, e: TailEnvelope, t: float) -> ExpAsymptotic:
    """The closed-form equivalent of R0(t) and the second-order Laplace value."""
    sol = saddle_solve(e, m, t)
    c = laplace_constants(m, e)
    lt = math.log(t)
    closed = (
        math.log(math.sqrt(2.0 * math.pi) * m.c2 * c.c10)
        + c.c11 * lt
        - 0.5 * math.log(c.A + c.B)
        - c.c10 * (1.0 / c.A + 1.0 / c.B) * t**c.rho
    )
    laplace = (
        math.log(m.c2)
        + m.gamma * math.log(sol.q_star)
        + 0.5 * math.log(2.0 * math.pi / sol.phi2_star)
        - sol.phi_star
    )
    return ExpAsymptotic(t=t, log_value_paper=closed, log_value_laplace=laplace)


def fit_asymptotics(
    values: Sequence[Tuple[float, float]], rho: float
) -> Tuple[float, float]:
    """Least-squares fit of ln R0(t) = -r t^rho + s ln t + const; returns (r, s).

    The conditioning gate applies to the design matrix after scaling each
    column to unit norm, which is the matrix handed to the solver.
    """
    if len(values) < 6:
        raise DomainError(f"fit needs at least 6 points, got {len(values)}")
    ts, lv = np.array(values, dtype=float).T
    if np.any(ts <= 0) or ts.max() / ts.min() < 100.0:
        raise DomainError("t values must be positive and span at least two decades")
    X = np.column_stack([-(ts**rho), np.log(ts), np.ones_like(ts)])
    norms = np.linalg.norm(X, axis=0)
    cond = np.linalg.cond(X / norms)
    if not cond <= _COND_LIMIT:
        raise IllConditionedError(f"design matrix condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(X / norms, lv, rcond=None)
    coef = coef / norms
    return float(coef[0]), float(coef[1])


def adjudicate(fitted: float, closed_form: float, laplace: float, tol: float) -> MatchVerdict:
    hits = [abs(fitted - closed_form) <= tol, abs(fitted - laplace) <= tol]
    if hits == [True, False]:
        return MatchVerdict.PAPER
    if hits == [False, True]:
        return MatchVerdict.LAPLACE
    return MatchVerdict.INCONCLUSIVE


def build_report(
    m: MixingDensity,
    e: TailEnvelope,
    t_grid: Sequence[float],
    rel_tol: float = DEFAULT_REL_TOL,
    match_tol: float = 0.05,
) -> AsymptoticReport:
    c = laplace_constants(m, e)
    values = [(t, bound_exp(m, e, t, rel_tol).log_value) for t in t_grid]
    r, s = fit_asymptotics(values, c.rho)
    verdict = adjudicate(s, c.c11, c.laplace_exponent, match_tol)
    log.debug("prefactor fit s=%.6g (closed form %.6g, laplace %.6g) -> %s",
              s, c.c11, c.laplace_exponent, verdict.value)
    return AsymptoticReport(
        rate_exponent=c.rho,
        rate_constant=c.rate_constant,
        prefactor_exponent_paper=c.c11,
        prefactor_exponent_laplace=c.laplace_exponent,
        prefactor_constant=c.prefactor_constant,
        A=c.A,
        B=c.B,
        c10=c.c10,
        fitted_rate=r,
        fitted_prefactor_exponent=s,
        match_verdict=verdict,
    )


# ---------- auxiliary integral limits ----------
def _check_grid(t_grid: Sequence[float]) -> None:
    ts = list(t_grid)
    if not ts or any(t < 1 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("t_grid must be strictly increasing with every t >= 1")


def lemma41_ratio(
    spec: AuxIntegralSpec, t_grid: Sequence[float], rel_tol: float = 1e-12
) -> List[Tuple[float, float]]:
    """t^theta I[theta, g](t) / Gamma(theta) for each t; at most 1, tending to 1."""
    _check_grid(t_grid)
    lg = log_gamma(spec.theta)
    out = []
    for t in t_grid:
        res = aux_integral(spec, t, rel_tol)
        out.append((t, math.exp(spec.theta * math.log(t) + res.log_value - lg)))
    return out


@dataclass(frozen=True, slots=True)
class LocalLimitRow:
    t: float
    scaled_integral: float  # t^theta J
    local_limit: float  # Gamma(theta) L(1/t)
    stated_limit: float  # int y^(theta-1) e^-y L(y) dy


def remark41_probe(
    spec: AuxIntegralSpec, t_grid: Sequence[float], rel_tol: float = 1e-10
) -> List[LocalLimitRow]:
    _check_grid(t_grid)
    weight = spec.L if spec.L is not None else (lambda x: np.ones_like(x))
    stated = integrate_semiaxis(
        lambda u: spec.log_density(u, 1.0, include_g=False), rel_tol, log_q=True
    ).value
    rows = []
    for t in t_grid:
        scaled = math.exp(spec.theta * math.log(t) + aux_integral(spec, t, rel_tol).log_value)
        local = math.exp(log_gamma(spec.theta)) * float(np.asarray(weight(np.array([1.0 / t]))).ravel()[0])
        rows.append(LocalLimitRow(t, scaled, local, stated))
    return rows
