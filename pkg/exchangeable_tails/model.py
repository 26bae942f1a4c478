"""Distributional objects: the mixing density, tail envelopes and conditional laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy import special

from exchangeable_tails.constants import GAMMA_MAX_ARG
from exchangeable_tails.errors import DomainError

ArrayLike = Union[float, np.ndarray]


class EnvelopeForm(str, Enum):
    DIRECT_POWER = "DirectPower"
    INVERSE_POWER = "InversePower"


class LawFamily(str, Enum):
    GAUSSIAN_SCALE = "GaussianScale"
    GAUSSIAN_PRECISION = "GaussianPrecision"


# ---------- special functions ----------
def gamma_function(x: float) -> float:
    """Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"Gamma argument must be positive, got {x}")
    if x > GAMMA_MAX_ARG:
        raise OverflowError(f"Gamma({x}) exceeds the float64 range")
    return float(special.gamma(x))


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log-Gamma argument must be positive, got {x}")
    return float(special.gammaln(x))


def normalizer(gamma: float, kappa: float, c3: float) -> float:
    """c2 = kappa * c3**((gamma+1)/kappa) / Gamma((gamma+1)/kappa)."""
    if not (gamma > -1 and kappa > 0 and c3 > 0):
        raise DomainError(
            f"mixing family needs gamma > -1, kappa > 0, c3 > 0; got "
            f"gamma={gamma}, kappa={kappa}, c3={c3}"
        )
    a = (gamma + 1.0) / kappa
    return math.exp(math.log(kappa) + a * math.log(c3) - log_gamma(a))


# ---------- mixing density ----------
@dataclass(frozen=True, slots=True)
class MixingDensity:
    """mu(dQ) = c2 Q^gamma exp(-c3 Q^kappa) dQ on (0, inf)."""

    gamma: float
    kappa: float
    c3: float
    c2: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c2", normalizer(self.gamma, self.kappa, self.c3))

    @property
    def shape(self) -> float:
        """Gamma shape of u = c3 Q^kappa."""
        return (self.gamma + 1.0) / self.kappa

    def log_pdf(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0):
            raise DomainError("log-density is defined for q > 0 only")
        return self.log_pdf_lnq(np.log(q))

    def log_pdf_lnq(self, y: ArrayLike) -> ArrayLike:
        """ln of the density at Q = e^y; finite where e^y itself underflows."""
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            out = math.log(self.c2) + self.gamma * y - self.c3 * np.exp(self.kappa * y)
        return float(out) if out.ndim == 0 else out

    def pdf(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=float)
        if np.any(q < 0):
            raise DomainError("mixing density is supported on q >= 0")
        if np.any(q == 0):
            if self.gamma < 0:
                raise DomainError("density is unbounded at q = 0 when gamma < 0")
            at_zero = self.c2 if self.gamma == 0 else 0.0
            with np.errstate(divide="ignore"):
                out = np.where(q == 0, at_zero, self.c2 * q**self.gamma * np.exp(-self.c3 * q**self.kappa))
        else:
            out = np.exp(self.log_pdf(q))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def mean_power(self, p: float) -> float:
        """E[Q^p] in closed form; finite for p > -(gamma+1)."""
        a = self.shape
        b = (self.gamma + 1.0 + p) / self.kappa
        if not b > 0:
            raise DomainError(f"E[Q^{p}] diverges for gamma={self.gamma}")
        return math.exp(log_gamma(b) - log_gamma(a) - (p / self.kappa) * math.log(self.c3))


def mixing_pdf(m: MixingDensity, q: ArrayLike) -> ArrayLike:
    return m.pdf(q)


# ---------- tail envelopes ----------
@dataclass(frozen=True, slots=True)
class TailEnvelope:
    """exp(-c1 t^alpha Q^beta) (DirectPower) or exp(-c1 t^alpha Q^-beta) (InversePower)."""

    form: EnvelopeForm
    c1: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "form", EnvelopeForm(self.form))
        if not (self.c1 > 0 and self.alpha > 0 and self.beta > 0):
            raise DomainError(
                f"envelope needs c1, alpha, beta > 0; got c1={self.c1}, "
                f"alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def signed_beta(self) -> float:
        return self.beta if self.form is EnvelopeForm.DIRECT_POWER else -self.beta

    def log_eval(self, t: ArrayLike, q: ArrayLike) -> ArrayLike:
        t = np.asarray(t, dtype=float)
        q = np.asarray(q, dtype=float)
        if np.any(t < 0):
            raise DomainError("envelope is defined for t >= 0")
        if np.any(q <= 0):
            raise DomainError("envelope is defined for q > 0")
        with np.errstate(divide="ignore", over="ignore"):
            out = -self.c1 * np.exp(self.alpha * np.log(t) + self.signed_beta * np.log(q))
        return float(out) if out.ndim == 0 else out

    def __call__(self, t: ArrayLike, q: ArrayLike) -> ArrayLike:
        return np.exp(self.log_eval(t, q))


def envelope_eval(e: TailEnvelope, t: ArrayLike, q: ArrayLike) -> ArrayLike:
    out = e(t, q)
    return float(out) if np.ndim(out) == 0 else out


def envelope_from_weibull(m: float, c_of_m: float) -> TailEnvelope:
    """Uniform-in-n envelope for i.i.d. sums with P(|eta| >= u) <= exp(-u^m).

    The Q-coupling is factored out: evaluate the result at q = 1 to get
    exp(-c(m) t^min(m, 2)).
    """
    if not m > 0:
        raise DomainError(f"Weibull exponent must be positive, got {m}")
    if not c_of_m > 0:
        raise DomainError(f"c(m) must be positive, got {c_of_m}")
    return TailEnvelope(EnvelopeForm.DIRECT_POWER, c1=c_of_m, alpha=min(m, 2.0), beta=1.0)


def iid_bound(u: ArrayLike, m: float, c_of_m: float) -> ArrayLike:
    return envelope_eval(envelope_from_weibull(m, c_of_m), u, 1.0)


# ---------- conditional laws ----------
@dataclass(frozen=True, slots=True)
class ConditionalLaw:
    """Centered normal xi | Q with standard deviation Q (scale) or 1/Q (precision)."""

    family: LawFamily

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", LawFamily(self.family))

    def scale(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=float)
        return q if self.family is LawFamily.GAUSSIAN_SCALE else 1.0 / q

    def variance(self, q: ArrayLike) -> ArrayLike:
        return np.asarray(self.scale(q)) ** 2

    def envelope(self) -> TailEnvelope:
        form = (
            EnvelopeForm.INVERSE_POWER
            if self.family is LawFamily.GAUSSIAN_SCALE
            else EnvelopeForm.DIRECT_POWER
        )
        return TailEnvelope(form, c1=0.5, alpha=2.0, beta=2.0)

    def log_tail(self, t: ArrayLike, q: ArrayLike) -> ArrayLike:
        """ln P(|S(n)| >= t | Q); the same for every n."""
        z = np.asarray(t, dtype=float) / np.asarray(self.scale(q), dtype=float)
        out = math.log(2.0) + special.log_ndtr(-z)
        out = np.minimum(out, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def log_tail_lnq(self, t: float, y: ArrayLike) -> ArrayLike:
        """log_tail at Q = e^y."""
        y = np.asarray(y, dtype=float)
        log_scale = y if self.family is LawFamily.GAUSSIAN_SCALE else -y
        with np.errstate(divide="ignore", over="ignore"):
            z = np.exp(math.log(t) - log_scale) if t > 0 else np.zeros_like(y)
        out = np.minimum(math.log(2.0) + special.log_ndtr(-z), 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def prob(self, a: float, b: float, q: ArrayLike) -> ArrayLike:
        """P(a < xi < b | Q)."""
        s = np.asarray(self.scale(q), dtype=float)
        return special.ndtr(b / s) - special.ndtr(a / s)

    def sample(self, q: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        """n conditionally i.i.d. draws per entry of q, shape (len(q), n)."""
        s = np.asarray(self.scale(q), dtype=float)
        return s[:, None] * rng.standard_normal((s.shape[0], n))
