import itertools
import math

import mpmath as mp
import numpy as np
import pytest

from exchangeable_tails import quadrature
from exchangeable_tails.errors import (
    DomainError,
    EndpointSingularityWarning,
    FormMismatchError,
    NonConvergenceError,
)
from exchangeable_tails.model import (
    ConditionalLaw,
    EnvelopeForm,
    LawFamily,
    MixingDensity,
    TailEnvelope,
    gamma_function,
)
from exchangeable_tails.quadrature import (
    AuxIntegralSpec,
    aux_integral,
    bound_exp,
    bound_power,
    integrate_semiaxis,
    mixture_moment,
    mixture_tail,
    normalization,
)

mp.mp.dps = 30

zero = lambda x: np.zeros_like(x)  # noqa: E731


def test_semiaxis_closed_forms():
    assert integrate_semiaxis(lambda q: -q).log_value == pytest.approx(0.0, abs=1e-10)
    res = integrate_semiaxis(lambda q: np.log(q) - q**2)
    assert res.log_value == pytest.approx(math.log(0.5), abs=1e-10)
    res = integrate_semiaxis(lambda q: 0.5 * np.log(q) - 2.0 * q)
    assert res.value == pytest.approx(gamma_function(1.5) / 2**1.5, rel=1e-10)
    assert res.evaluations > 0
    assert res.rel_tol_achieved <= 1e-10


def test_semiaxis_peak_hint_gives_same_value():
    f = lambda q: 3.0 * np.log(q) - 5.0 * q  # noqa: E731
    a = integrate_semiaxis(f, 1e-12)
    b = integrate_semiaxis(f, 1e-12, peak=0.6)
    assert a.log_value == pytest.approx(b.log_value, abs=1e-11)
    assert a.value == pytest.approx(6.0 / 5.0**4, rel=1e-11)


def test_semiaxis_rejects_nan_and_bad_tolerance():
    with pytest.raises(DomainError):
        integrate_semiaxis(lambda q: np.full_like(q, np.nan))
    with pytest.raises(DomainError):
        integrate_semiaxis(lambda q: -q, rel_tol=1e-16)
    with pytest.raises(DomainError):
        integrate_semiaxis(lambda q: -q, rel_tol=0.5)


def test_semiaxis_budget(monkeypatch):
    monkeypatch.setattr(quadrature, "EVAL_BUDGET", 100)
    with pytest.raises(NonConvergenceError):
        integrate_semiaxis(lambda q: -q)


def test_aux_integral_exact_cases():
    assert aux_integral(AuxIntegralSpec(1.0, zero), 2.0).value == pytest.approx(0.5, rel=1e-10)
    assert aux_integral(AuxIntegralSpec(2.0, lambda x: x), 1.0).value == pytest.approx(0.25, rel=1e-10)


def test_aux_integral_against_mpmath():
    res = aux_integral(AuxIntegralSpec(1.5, lambda x: x**2), 10.0, rel_tol=1e-12)
    ref = mp.quad(lambda x: mp.sqrt(x) * mp.exp(-10 * x - x**2), [0, 1, mp.inf])
    assert res.value == pytest.approx(float(ref), rel=1e-10)


def test_aux_integral_warns_on_singular_origin():
    with pytest.warns(EndpointSingularityWarning):
        res = aux_integral(AuxIntegralSpec(0.5, zero), 4.0)
    assert res.value == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-10)


def test_aux_integral_weight():
    plain = aux_integral(AuxIntegralSpec(2.0, lambda x: x), 3.0)
    half = aux_integral(AuxIntegralSpec(2.0, lambda x: x, L=lambda x: np.full_like(x, 0.5)), 3.0)
    assert half.value == pytest.approx(0.5 * plain.value, rel=1e-10)


def test_aux_spec_validation():
    with pytest.raises(DomainError):
        AuxIntegralSpec(0.0, zero)
    with pytest.raises(DomainError):
        AuxIntegralSpec(1.0, lambda x: 1.0 + x)
    with pytest.raises(DomainError):
        AuxIntegralSpec(1.0, zero, L=lambda x: np.full_like(x, 2.0))
    with pytest.raises(DomainError):
        aux_integral(AuxIntegralSpec(1.0, lambda x: x - 2.0 * x**2), 2.0)
    with pytest.raises(DomainError):
        aux_integral(AuxIntegralSpec(1.0, zero), 0.0)


def test_bound_power_merged_exponentials():
    m = MixingDensity(0.0, 1.0, 1.0)
    e = TailEnvelope(EnvelopeForm.DIRECT_POWER, 1.0, 1.0, 1.0)
    assert bound_power(m, e, 1.0).value == pytest.approx(0.5, rel=1e-10)
    assert bound_power(m, e, 3.0).value == pytest.approx(0.25, rel=1e-10)


def test_bound_power_agrees_with_aux_integral(power_family):
    # c2 = 1 and int Q exp(-Q - 4Q^2) dQ = I[2, 4x^2](1)
    m, e = power_family
    direct = bound_power(m, e, 2.0)
    via_aux = aux_integral(AuxIntegralSpec(2.0, lambda x: 4.0 * x**2), 1.0)
    assert direct.value == pytest.approx(via_aux.value, rel=1e-9)


def test_bound_exp_bessel_identities():
    m = MixingDensity(0.0, 1.0, 1.0)
    e = TailEnvelope(EnvelopeForm.INVERSE_POWER, 1.0, 1.0, 1.0)
    assert bound_exp(m, e, 1.0).value == pytest.approx(float(2 * mp.besselk(1, 2)), rel=1e-10)

    m = MixingDensity(1.0, 2.0, 0.5)
    e = TailEnvelope(EnvelopeForm.INVERSE_POWER, 0.5, 2.0, 2.0)
    assert bound_exp(m, e, 3.0).value == pytest.approx(float(3 * mp.besselk(1, 3)), rel=1e-10)


@pytest.mark.parametrize("t", [5.0, 100.0, 1000.0, 10_000.0])
def test_bound_exp_far_below_underflow(saddle_family, t):
    m, e = saddle_family
    res = bound_exp(m, e, t)
    ref = mp.log(2 * t * mp.besselk(1, 2 * t))
    assert res.log_value == pytest.approx(float(ref), rel=1e-11, abs=1e-9)
    if t >= 1000.0:
        assert res.value == 0.0


def test_bound_form_and_domain(saddle_family, power_family):
    with pytest.raises(FormMismatchError):
        bound_power(*saddle_family, 2.0)
    with pytest.raises(FormMismatchError):
        bound_exp(*power_family, 2.0)
    with pytest.raises(DomainError):
        bound_exp(*saddle_family, 0.5)


def test_mixture_tail_is_laplace_for_rayleigh_scale():
    # Q^2 ~ Exp(mean 2) makes Q Z a unit Laplace variable
    m = MixingDensity(1.0, 2.0, 0.5)
    law = ConditionalLaw(LawFamily.GAUSSIAN_SCALE)
    assert mixture_tail(m, law, 0.0).value == pytest.approx(1.0, rel=1e-10)
    for t in [0.5, 2.0, 30.0]:
        assert mixture_tail(m, law, t).value == pytest.approx(math.exp(-t), rel=1e-9)


def test_mixture_tail_below_envelope_bound():
    m = MixingDensity(1.0, 2.0, 0.5)
    law = ConditionalLaw(LawFamily.GAUSSIAN_SCALE)
    for t in [1.0, 2.0, 3.0, 10.0]:
        assert mixture_tail(m, law, t).value <= bound_exp(m, law.envelope(), t).value


@pytest.mark.parametrize(
    "gamma, kappa, c3",
    list(itertools.product([0.0, 0.5, 2.0], [0.5, 1.0, 2.0], [0.5, 1.0, 3.0])),
)
def test_normalization_grid(gamma, kappa, c3):
    assert abs(normalization(MixingDensity(gamma, kappa, c3)).value - 1.0) <= 1e-8


def test_mixture_moment_matches_closed_form():
    m = MixingDensity(2.0, 1.0, 2.0)
    assert mixture_moment(m, 1.0).value == pytest.approx(1.5, rel=1e-10)
    assert mixture_moment(m, -0.5).value == pytest.approx(m.mean_power(-0.5), rel=1e-10)


@pytest.mark.parametrize("gamma", [-0.5, -0.9, -0.99, -0.999])
def test_normalization_with_gamma_near_minus_one(gamma):
    res = normalization(MixingDensity(gamma, 1.0, 1.0))
    assert abs(res.value - 1.0) <= 1e-8


def test_normalization_near_minus_one_at_loose_tolerance():
    res = normalization(MixingDensity(-0.999, 1.0, 1.0), rel_tol=1e-5)
    assert res.value == pytest.approx(1.0, rel=1e-5)


def test_bound_power_with_gamma_near_minus_one():
    # c2 int Q^gamma e^-(t+1)Q dQ = (t+1)^-(gamma+1) since c2 = 1/Gamma(gamma+1)
    m = MixingDensity(-0.99, 1.0, 1.0)
    e = TailEnvelope(EnvelopeForm.DIRECT_POWER, 1.0, 1.0, 1.0)
    assert bound_power(m, e, 3.0).value == pytest.approx(4.0**-0.01, rel=1e-9)


def test_aux_integral_tiny_theta():
    with pytest.warns(EndpointSingularityWarning):
        res = aux_integral(AuxIntegralSpec(0.002, zero), 2.0)
    assert res.value == pytest.approx(gamma_function(0.002) * 2.0**-0.002, rel=1e-8)


def test_semiaxis_mass_below_smallest_double():
    # Q^-0.999 e^-Q: most of Gamma(0.001) sits at ln Q < -700
    with pytest.raises(NonConvergenceError):
        integrate_semiaxis(lambda q: -0.999 * np.log(q) - q)
    res = integrate_semiaxis(lambda y: -0.999 * y - np.exp(y), log_q=True)
    assert res.value == pytest.approx(gamma_function(0.001), rel=1e-9)


def test_semiaxis_non_integrable_origin():
    with pytest.raises(NonConvergenceError):
        integrate_semiaxis(lambda y: -y - np.exp(y), log_q=True)


def test_aux_integral_keeps_quadrature_value():
    spec = AuxIntegralSpec(2.0, zero)
    raw = integrate_semiaxis(lambda u: spec.log_density(u, 3.0), log_q=True)
    assert aux_integral(spec, 3.0).log_value == raw.log_value


@pytest.mark.filterwarnings("ignore::exchangeable_tails.errors.EndpointSingularityWarning")
def test_aux_integral_below_gamma_bound_on_random_draws():
    rng = np.random.default_rng(11)
    for theta, p, log10_t in zip(
        rng.uniform(0.3, 4.0, 25), rng.uniform(0.2, 3.0, 25), rng.uniform(0.0, 4.0, 25)
    ):
        t = 10.0**log10_t
        res = aux_integral(AuxIntegralSpec(theta, lambda x, p=p: x**p), t)
        bound = math.lgamma(theta) - theta * math.log(t)
        assert res.log_value <= bound + 1e-9


@pytest.mark.parametrize("t", [1.0, 3.0, 10.0, 30.0, 100.0])
def test_log_domain_agrees_with_direct_evaluation(saddle_family, t):
    m, e = saddle_family
    res = bound_exp(m, e, t)
    q_star = math.sqrt(t)
    direct = mp.quad(
        lambda q: m.c2 * q * mp.exp(-(t**2) / q**2 - q**2),
        [0, q_star / 2, q_star, 2 * q_star, mp.inf],
    )
    assert float(direct) > 1e-250
    assert res.value == pytest.approx(float(direct), rel=1e-9)

    q_form = integrate_semiaxis(
        lambda q: math.log(m.c2) + np.log(q) - t**2 / q**2 - q**2, peak=q_star
    )
    assert q_form.value == pytest.approx(res.value, rel=1e-9)
