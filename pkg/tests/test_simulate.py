import math

import numpy as np
import pytest
from scipy import special, stats

from exchangeable_tails.errors import DegeneratePartitionError, DomainError
from exchangeable_tails.model import ConditionalLaw, LawFamily, MixingDensity
from exchangeable_tails.quadrature import mixture_moment
from exchangeable_tails.simulate import (
    DeFinettiModel,
    TailQuery,
    block_rng,
    clopper_pearson,
    conditional_moments_check,
    empirical_measure_check,
    exchangeability_check,
    mc_tail,
    mc_tail_grid,
    sample_q,
    sample_sum,
    sample_sums,
)

DRAWS = 1_000_000


def test_sample_q_unit_exponential():
    q = sample_q(MixingDensity(0.0, 1.0, 1.0), np.random.default_rng(1), DRAWS)
    assert abs(q.mean() - 1.0) <= 0.004
    assert np.all(q > 0)


def test_sample_q_square_is_exponential():
    q = sample_q(MixingDensity(1.0, 2.0, 1.0), np.random.default_rng(2), DRAWS)
    assert abs((q**2).mean() - 1.0) <= 0.004


def test_sample_q_scaled_gamma():
    m = MixingDensity(2.0, 1.0, 2.0)
    q = sample_q(m, np.random.default_rng(3), DRAWS)
    assert abs(q.mean() - m.mean_power(1.0)) <= 0.004
    assert m.mean_power(1.0) == pytest.approx(1.5)
    assert isinstance(sample_q(m, np.random.default_rng(3)), float)


def test_sample_sum_single_term_is_first_variable(unit_normal_model):
    s = sample_sum(unit_normal_model, 1, np.random.default_rng(9))
    assert s == np.random.default_rng(9).standard_normal()


def test_fixed_q_sum_is_standard_normal(unit_normal_model):
    s = sample_sums(unit_normal_model, 25, 50_000, seed=4)
    assert abs(s.mean()) <= 4.0 / math.sqrt(s.size)
    assert abs(s.var() - 1.0) <= 4.0 * math.sqrt(2.0 / s.size)
    assert stats.kstest(s, "norm").pvalue > 1e-3


@pytest.mark.parametrize("n", [1, 10])
def test_sum_variance_is_second_moment_of_q(scale_model, n):
    s = sample_sums(scale_model, n, 400_000, seed=21 + n)
    second = mixture_moment(scale_model.mixing, 2.0).value
    assert second == pytest.approx(2.0, rel=1e-10)
    se = np.std(s**2) / math.sqrt(s.size)
    assert abs(np.mean(s**2) - second) <= 4.0 * se


@pytest.mark.parametrize("q", [0.4, 1.0, 2.5])
def test_fixed_q_law_same_for_one_and_fifty_terms(scale_model, q):
    model = DeFinettiModel(scale_model.mixing, scale_model.law, fixed_q=q)
    one = sample_sums(model, 1, 40_000, seed=5)
    fifty = sample_sums(model, 50, 40_000, seed=6)
    assert stats.ks_2samp(one, fifty).pvalue > 1e-3
    assert stats.kstest(fifty / q, "norm").pvalue > 1e-3


def test_mc_tail_fixed_q_two_sided_five_percent(unit_normal_model):
    est = mc_tail(unit_normal_model, TailQuery(n=10, t=1.959964, trials=200_000, seed=17))
    lo, hi = clopper_pearson(est.successes, est.trials, 1e-4)
    assert lo <= 0.05 <= hi
    assert est.ci_low <= est.p_hat <= est.ci_high


def test_mc_tail_zero_threshold(scale_model):
    est = mc_tail(scale_model, TailQuery(n=3, t=0.0, trials=10_000, seed=1))
    assert est.p_hat == 1.0
    assert est.ci_high == 1.0
    assert est.successes == est.trials == 10_000


def test_mc_tail_n_independent(scale_model):
    ests = [mc_tail_grid(scale_model, n, [2.0], 200_000, seed=23)[0] for n in (1, 10, 100)]
    assert max(e.ci_low for e in ests) <= min(e.ci_high for e in ests)
    for e in ests:
        lo, hi = clopper_pearson(e.successes, e.trials, 1e-4)
        assert lo <= math.exp(-2.0) <= hi


def test_mc_tail_grid_common_random_numbers(scale_model):
    ests = mc_tail_grid(scale_model, 5, [0.5, 1.0, 2.0, 4.0], 40_000, seed=3)
    counts = [e.successes for e in ests]
    assert counts == sorted(counts, reverse=True)


def test_mc_tail_deterministic_across_workers(scale_model):
    one = mc_tail_grid(scale_model, 10, [1.0, 2.0, 3.0], 50_000, seed=99, workers=1)
    again = mc_tail_grid(scale_model, 10, [1.0, 2.0, 3.0], 50_000, seed=99, workers=1)
    many = mc_tail_grid(scale_model, 10, [1.0, 2.0, 3.0], 50_000, seed=99, workers=4)
    assert one == again == many


def test_streams_are_distinct():
    a = block_rng(5, 0, 0).random(4)
    b = block_rng(5, 0, 1).random(4)
    c = block_rng(5, 1, 0).random(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    np.testing.assert_array_equal(a, block_rng(5, 0, 0).random(4))


def test_query_and_seed_validation(scale_model):
    with pytest.raises(DomainError):
        TailQuery(n=1, t=-1.0, trials=10, seed=0)
    with pytest.raises(DomainError):
        TailQuery(n=0, t=1.0, trials=10, seed=0)
    with pytest.raises(DomainError):
        block_rng(-1, 0, 0)
    with pytest.raises(DomainError):
        block_rng(1 << 64, 0, 0)
    with pytest.raises(DomainError):
        DeFinettiModel(scale_model.mixing, scale_model.law, fixed_q=0.0)
    with pytest.raises(DomainError):
        sample_sums(scale_model, 0, 10, 0)


def test_clopper_pearson_edges():
    lo, hi = clopper_pearson(0, 10)
    assert lo == 0.0
    assert hi == pytest.approx(1.0 - 0.025**0.1, rel=1e-12)
    lo, hi = clopper_pearson(10, 10)
    assert hi == 1.0
    assert lo == pytest.approx(0.025**0.1, rel=1e-12)


def test_exchangeability_identity_permutation(scale_model):
    rep = exchangeability_check(scale_model, 3, [-1.0, 0.0, 1.0], 20_000, seed=2, permutations=[(0, 1, 2)])
    assert rep.tv_distances == (0.0,)
    assert rep.max_z == (0.0,)
    assert rep.passed


def test_exchangeability_transposition(scale_model):
    rep = exchangeability_check(scale_model, 2, [-1.0, 0.0, 1.0], 200_000, seed=8, permutations=[(1, 0)])
    assert rep.passed
    assert sum(rep.cell_probabilities) == pytest.approx(1.0)


def test_exchangeability_random_permutations(scale_model):
    edges = [-1.5, -0.5, 0.0, 0.5, 1.5]
    cells = len(edges) + 1
    z_limit = max(4.0, float(special.ndtri(1.0 - 1e-3 / (2.0 * 3 * cells**3))))
    rep = exchangeability_check(scale_model, 3, edges, 200_000, seed=12, workers=2, z_limit=z_limit)
    assert len(rep.permutations) == 3
    assert rep.passed
    assert max(rep.tv_distances) < 0.02


def test_exchangeability_validation(scale_model):
    with pytest.raises(DegeneratePartitionError):
        exchangeability_check(scale_model, 2, [50.0, 60.0], 10_000, seed=1)
    with pytest.raises(DomainError):
        exchangeability_check(scale_model, 7, [0.0], 1000, seed=1)
    with pytest.raises(DomainError):
        exchangeability_check(scale_model, 2, [1.0, 0.0], 1000, seed=1)
    with pytest.raises(DomainError):
        exchangeability_check(scale_model, 3, [0.0], 1000, seed=1, permutations=[(0, 0, 1)])


def test_empirical_measure_whole_line(scale_model):
    rep = empirical_measure_check(scale_model, (-math.inf, math.inf), 10_000, 5, seed=1)
    assert rep.inside == 5
    assert rep.max_deviation == 0.0


def test_empirical_measure_half_line(scale_model):
    rep = empirical_measure_check(scale_model, (0.0, math.inf), 10_000, 20, seed=6)
    assert rep.fraction_inside == 1.0


def test_empirical_measure_validation(scale_model):
    with pytest.raises(DomainError):
        empirical_measure_check(scale_model, (1.0, 1.0), 10_000, 5, seed=1)
    with pytest.raises(DomainError):
        empirical_measure_check(scale_model, (0.0, 1.0), 100, 5, seed=1)


def test_conditional_centering():
    model = DeFinettiModel(MixingDensity(1.0, 2.0, 0.5), ConditionalLaw(LawFamily.GAUSSIAN_PRECISION))
    mean, se, passed = conditional_moments_check(model, 2.0, 100_000, seed=4)
    assert passed
    assert se == pytest.approx(0.5 / math.sqrt(100_000), rel=0.02)
    assert abs(mean) <= 4.0 * se
