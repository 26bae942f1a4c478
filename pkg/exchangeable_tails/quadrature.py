"""Semi-axis integrals of the mixture bounds, evaluated in the log domain.

Every integral over (0, inf) is rewritten in y = ln Q and mapped once more by
y = y_c + w sinh(s), which gives double-exponential decay at both ends for
the integrands met here (algebraic behaviour at the origin, stretched
exponential decay at infinity). The s-range grows until both ends are dead,
so an origin factor Q^gamma with gamma close to -1, whose mass reaches far
below the smallest double, is integrated in full. The trapezoid rule in s is
refined by halving the step until two successive levels agree; the log of
the largest term is carried separately so that nothing underflows.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from exchangeable_tails.constants import (
    DEFAULT_REL_TOL,
    EVAL_BUDGET,
    MAX_REL_TOL,
    MIN_LEVELS,
    MIN_REL_TOL,
)
from exchangeable_tails.errors import (
    DomainError,
    EndpointSingularityWarning,
    FormMismatchError,
    NonConvergenceError,
)
from exchangeable_tails.model import (
    ConditionalLaw,
    EnvelopeForm,
    MixingDensity,
    TailEnvelope,
    log_gamma,
)

log = logging.getLogger(__name__)

LogIntegrand = Callable[[np.ndarray], np.ndarray]

_Y_LIMIT = 700.0  # |ln Q| past this is not representable in float64
_LOG_TINY = math.log(np.finfo(float).tiny)
_SCAN = np.arange(-100.0, 100.25, 0.25)
_S_MAX = 8.0
_S_CAP = 40.0  # w sinh(40) ~ 1e17 w
_S_GROW = 2.0
_H0 = 0.5
_CUTOFF = -80.0  # shifted log-terms below this are dropped from the range


@dataclass(frozen=True, slots=True)
class QuadratureResult:
    log_value: float
    value: float
    abs_tol_achieved: float
    rel_tol_achieved: float
    evaluations: int

    @classmethod
    def from_log(cls, log_value: float, rel: float, evaluations: int) -> "QuadratureResult":
        with np.errstate(under="ignore", over="ignore"):
            value = float(np.exp(log_value))
        return cls(log_value, value, rel * value, rel, evaluations)

    def scaled(self, log_factor: float) -> "QuadratureResult":
        return QuadratureResult.from_log(
            self.log_value + log_factor, self.rel_tol_achieved, self.evaluations
        )


@dataclass(frozen=True, slots=True)
class AuxIntegralSpec:
    """Defines I[theta, g](t) and, with a weight L, J[theta, g, L](t).

    ``g`` and ``L`` must accept numpy arrays.
    """

    theta: float
    g: Callable[[np.ndarray], np.ndarray]
    L: Optional[Callable[[np.ndarray], np.ndarray]] = None
    L_max: float = 1.0

    def __post_init__(self) -> None:
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        g0 = float(np.asarray(self.g(np.array([1e-12])), dtype=float).ravel()[0])
        if not (0 <= g0 <= 1e-8):
            raise DomainError(f"g must vanish at the origin, g(1e-12) = {g0}")
        if self.L is not None:
            if not (math.isfinite(self.L_max) and self.L_max > 0):
                raise DomainError(f"L_max must be finite and positive, got {self.L_max}")
            probe = np.asarray(self.L(np.logspace(-12, 6, 73)), dtype=float)
            if np.any(probe < 0) or np.any(probe > self.L_max):
                raise DomainError("weight L leaves [0, L_max] on the probe grid")

    def log_weight(self, x: np.ndarray) -> np.ndarray:
        if self.L is None:
            return np.zeros_like(x)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.L(x), dtype=float))

    def log_density(self, u: np.ndarray, t: float, include_g: bool = True) -> np.ndarray:
        """ln of x^(theta-1) exp(-t x - g(x)) L(x) at x = e^u.

        g and L see x clamped to the smallest normal double.
        """
        with np.errstate(under="ignore", over="ignore"):
            x = np.exp(u)
            xc = np.exp(np.maximum(u, _LOG_TINY))
            out = (self.theta - 1.0) * u - t * x + self.log_weight(xc)
            if include_g:
                out = out - np.asarray(self.g(xc), dtype=float)
        return out


class _Integrand:
    """ln f(e^y) + y with NaN screening and an evaluation counter.

    With ``log_q`` the wrapped function takes y = ln Q itself and is valid on
    the whole line; otherwise it takes Q and is only evaluated for
    |y| <= _Y_LIMIT.
    """

    def __init__(self, f_log: LogIntegrand, log_q: bool = False) -> None:
        self.f_log = f_log
        self.log_q = log_q
        self.evaluations = 0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.full(y.shape, -np.inf)
        inside = np.isfinite(y) if self.log_q else np.abs(y) <= _Y_LIMIT
        if inside.any():
            self.evaluations += int(inside.sum())
            if self.evaluations > EVAL_BUDGET:
                raise NonConvergenceError(
                    f"evaluation budget of {EVAL_BUDGET} exhausted"
                )
            arg = y[inside] if self.log_q else np.exp(y[inside])
            with np.errstate(all="ignore"):
                vals = np.asarray(self.f_log(arg), dtype=float)
            if np.isnan(vals).any():
                raise DomainError("log-integrand returned NaN")
            if np.isposinf(vals).any():
                raise DomainError("log-integrand returned +inf; integrand is not integrable")
            out[inside] = vals + y[inside]
        return out


def _check_tol(rel_tol: float) -> None:
    if not MIN_REL_TOL <= rel_tol <= MAX_REL_TOL:
        raise DomainError(
            f"rel_tol must lie in [{MIN_REL_TOL}, {MAX_REL_TOL}], got {rel_tol}"
        )


def _locate_peak(g: _Integrand, peak: Optional[float]) -> float:
    if peak is not None:
        if not peak > 0:
            raise DomainError(f"peak hint must be positive, got {peak}")
        y0, step = math.log(peak), 0.1
    else:
        vals = g(_SCAN)
        if not np.isfinite(vals).any():
            raise DomainError("integrand vanishes on the whole scan range")
        i = int(np.argmax(vals))
        y0, step = float(_SCAN[i]), 0.25
    try:
        res = optimize.minimize_scalar(
            lambda y: -float(g(np.array([y]))[0]),
            bracket=(y0 - step, y0 + step),
            method="golden",
        )
        if np.isfinite(res.fun) and -res.fun >= float(g(np.array([y0]))[0]):
            return float(res.x)
    except (ValueError, RuntimeError):
        log.debug("golden refinement failed near y=%g; keeping the scan point", y0)
    return y0


def _peak_width(g: _Integrand, y_c: float) -> float:
    delta = 1e-3
    for _ in range(2):
        gm, g0, gp = g(np.array([y_c - delta, y_c, y_c + delta]))
        curv = (gp - 2.0 * g0 + gm) / delta**2
        if not (np.isfinite(curv) and curv < 0):
            return 1.0
        w = 1.0 / math.sqrt(-curv)
        if w >= 10.0 * delta:
            break
        delta = w / 10.0
    return float(min(max(w, 1e-6), 50.0))


def integrate_semiaxis(
    f_log: LogIntegrand,
    rel_tol: float = DEFAULT_REL_TOL,
    *,
    peak: Optional[float] = None,
    log_q: bool = False,
) -> QuadratureResult:
    """ln of the integral over (0, inf) of exp(f_log(Q)).

    ``f_log`` takes an array of Q values, or of ln Q values when ``log_q``
    is set. Only the ln Q form can carry mass beyond |ln Q| = 700; in the Q
    form such mass raises NonConvergenceError. ``peak`` is an optional
    location of the integrand's maximum in Q; without it a golden-section
    search over ln Q is run.
    """
    _check_tol(rel_tol)
    g = _Integrand(f_log, log_q)
    y_c = _locate_peak(g, peak)
    w = _peak_width(g, y_c)
    if not log_q:
        edges = g(np.array([-_Y_LIMIT, _Y_LIMIT])) - float(g(np.array([y_c]))[0])
        if np.any(edges > _CUTOFF):
            raise NonConvergenceError(
                f"integrand mass reaches |ln Q| = {_Y_LIMIT:g}; pass it in ln Q with log_q=True"
            )

    def terms(s: np.ndarray) -> np.ndarray:
        return g(y_c + w * np.sinh(s)) + math.log(w) + np.log(np.cosh(s))

    lo, hi = -_S_MAX, _S_MAX
    while True:
        coarse = np.arange(lo, hi + _H0 / 2, _H0)
        t0 = terms(coarse)
        if not np.isfinite(t0).any():
            raise DomainError("integrand vanishes at every node")
        shift = float(np.max(t0[np.isfinite(t0)]))
        alive = np.nonzero(t0 - shift > _CUTOFF)[0]
        grow_lo, grow_hi = alive[0] == 0, alive[-1] == coarse.size - 1
        if not (grow_lo or grow_hi):
            break
        if (grow_lo and lo <= -_S_CAP) or (grow_hi and hi >= _S_CAP):
            raise NonConvergenceError(f"integrand has not decayed at s = +-{_S_CAP:g}")
        lo -= _S_GROW * grow_lo
        hi += _S_GROW * grow_hi
    s_lo = max(coarse[alive[0]] - _H0, lo)
    s_hi = min(coarse[alive[-1]] + _H0, hi)

    n = 16
    h = (s_hi - s_lo) / n
    total = float(np.sum(np.exp(terms(s_lo + h * np.arange(n + 1)) - shift))) * h
    prev = math.nan
    level = 0
    while True:
        level += 1
        n *= 2
        h /= 2.0
        odd = s_lo + h * np.arange(1, n, 2)
        prev, total = total, 0.5 * total + h * float(np.sum(np.exp(terms(odd) - shift)))
        if not total > 0:
            raise DomainError("integral underflowed below the peak scale")
        rel = abs(total - prev) / total
        if level >= MIN_LEVELS and rel <= rel_tol:
            break
        if g.evaluations * 2 > EVAL_BUDGET:
            raise NonConvergenceError(
                f"no convergence to rel_tol={rel_tol} within {EVAL_BUDGET} evaluations "
                f"(last change {rel:.3g})"
            )
    log_value = shift + math.log(total)
    log.debug(
        "semi-axis integral: peak ln Q=%.6g width=%.3g levels=%d evals=%d log=%.15g",
        y_c, w, level, g.evaluations, log_value,
    )
    return QuadratureResult.from_log(log_value, rel, g.evaluations)


# ---------- mixture bound integrals ----------
def aux_integral(
    spec: AuxIntegralSpec, t: float, rel_tol: float = DEFAULT_REL_TOL
) -> QuadratureResult:
    """I[theta, g](t), or J[theta, g, L](t) when a weight L is set."""
    if not t > 0:
        raise DomainError(f"aux_integral needs t > 0, got {t}")
    if spec.theta < 1:
        warnings.warn(
            f"theta={spec.theta} < 1: integrable singularity at the origin",
            EndpointSingularityWarning,
            stacklevel=2,
        )

    res = integrate_semiaxis(lambda u: spec.log_density(u, t), rel_tol, log_q=True)
    log_bound = log_gamma(spec.theta) - spec.theta * math.log(t)
    if spec.L is not None:
        log_bound += math.log(spec.L_max)
    if res.log_value > log_bound + 10.0 * max(res.rel_tol_achieved, rel_tol):
        raise DomainError("integral exceeds Gamma(theta) t^-theta sup L; is g negative?")
    if res.log_value > log_bound:
        log.debug(
            "aux integral at t=%g sits %.3g above its Gamma bound in log, within tolerance",
            t, res.log_value - log_bound,
        )
    return res


def _require(e: TailEnvelope, form: EnvelopeForm, t: float) -> None:
    if e.form is not form:
        raise FormMismatchError(f"expected a {form.value} envelope, got {e.form.value}")
    if not t >= 1:
        raise DomainError(f"mixture bounds are stated for t >= 1, got {t}")


def _mixture_bound(
    m: MixingDensity, e: TailEnvelope, t: float, rel_tol: float, peak: Optional[float]
) -> QuadratureResult:
    log_c2 = math.log(m.c2)
    log_ct = math.log(e.c1) + e.alpha * math.log(t)

    def f_log(y: np.ndarray) -> np.ndarray:
        return (
            log_c2
            + m.gamma * y
            - np.exp(log_ct + e.signed_beta * y)
            - m.c3 * np.exp(m.kappa * y)
        )

    return integrate_semiaxis(f_log, rel_tol, peak=peak, log_q=True)


def bound_power(
    m: MixingDensity, e: TailEnvelope, t: float, rel_tol: float = DEFAULT_REL_TOL
) -> QuadratureResult:
    """c2 * int Q^gamma exp(-c1 t^alpha Q^beta - c3 Q^kappa) dQ."""
    _require(e, EnvelopeForm.DIRECT_POWER, t)
    return _mixture_bound(m, e, t, rel_tol, None)


def bound_exp(
    m: MixingDensity, e: TailEnvelope, t: float, rel_tol: float = DEFAULT_REL_TOL
) -> QuadratureResult:
    """R0(t) = c2 * int Q^gamma exp(-c1 t^alpha Q^-beta - c3 Q^kappa) dQ.

    The saddle point of the exponent seeds the peak search, so the result
    stays representable in the log domain far below float64 underflow.
    """
    from exchangeable_tails.asymptotics import saddle_solve

    _require(e, EnvelopeForm.INVERSE_POWER, t)
    sol = saddle_solve(e, m, t)
    return _mixture_bound(m, e, t, rel_tol, sol.q_star)


def mixture_tail(
    m: MixingDensity, law: ConditionalLaw, t: float, rel_tol: float = DEFAULT_REL_TOL
) -> QuadratureResult:
    """R_n(t) = int P(|S(n)| >= t | Q) mu(dQ), exact for the Gaussian families."""
    if not t >= 0:
        raise DomainError(f"tail threshold must be non-negative, got {t}")
    return integrate_semiaxis(
        lambda y: m.log_pdf_lnq(y) + law.log_tail_lnq(t, y), rel_tol, log_q=True
    )


def normalization(m: MixingDensity, rel_tol: float = DEFAULT_REL_TOL) -> QuadratureResult:
    return integrate_semiaxis(m.log_pdf_lnq, rel_tol, log_q=True)


def mixture_moment(m: MixingDensity, p: float, rel_tol: float = DEFAULT_REL_TOL) -> QuadratureResult:
    """E[Q^p] under mu by quadrature."""
    return integrate_semiaxis(lambda y: m.log_pdf_lnq(y) + p * y, rel_tol, log_q=True)
