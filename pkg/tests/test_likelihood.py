import numpy as np
import pytest
from scipy import stats

from bsmmr.domain import (
    BINOMIAL,
    BaselineSpec,
    CovariateBox,
    Dataset,
    LikelihoodSpec,
    RegionData,
    RegionGraph,
)
from bsmmr.likelihood import (
    NuisanceState,
    gibbs_update_sigma2,
    initial_nuisance,
    log_likelihood,
    log_likelihood_delta,
    mh_update_alpha,
    predictive_mean,
    predictive_mean_many,
)
from bsmmr.surface import constant_surface, random_monotone_surface

UNIT = CovariateBox((0.0, 0.0), (1.0, 1.0))


def gaussian_setup(seed=0, count=60, alpha=0.3, sigma2=0.04):
    rng = np.random.default_rng(seed)
    surf = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
    x = rng.uniform(size=(count, 2))
    y = alpha + surf.evaluate_many(x) + np.sqrt(sigma2) * rng.standard_normal(count)
    data = Dataset((RegionData(x, y),))
    nuis = NuisanceState(np.array([alpha]), np.array([sigma2]))
    return surf, data, nuis, rng


def test_gaussian_loglik_matches_scipy():
    surf, data, nuis, _ = gaussian_setup()
    lik = LikelihoodSpec()
    got = log_likelihood(0, surf, nuis, data, lik)
    mean = nuis.alpha[0] + surf.evaluate_many(data[0].x)
    expected = float(np.sum(stats.norm.logpdf(data[0].y, mean, np.sqrt(nuis.sigma2[0]))))
    assert got == pytest.approx(expected, abs=1e-10)


def test_binomial_loglik_matches_scipy():
    rng = np.random.default_rng(1)
    surf = random_monotone_surface(rng, UNIT, 0.0, 2.0, 6)
    x = rng.uniform(size=(40, 2))
    trials = np.full(40, 25)
    prob = 1.0 / (1.0 + np.exp(-(0.1 + surf.evaluate_many(x))))
    y = rng.binomial(25, prob).astype(float)
    data = Dataset((RegionData(x, y, trials),))
    nuis = NuisanceState(np.array([0.1]), np.array([1.0]))
    lik = LikelihoodSpec(family=BINOMIAL)
    got = log_likelihood(0, surf, nuis, data, lik)
    expected = float(np.sum(stats.binom.logpmf(y, trials, prob)))
    assert got == pytest.approx(expected, abs=1e-10)


def test_empty_region_loglik_zero():
    data = Dataset((RegionData(np.zeros((0, 2)), np.zeros(0)),))
    surf = constant_surface(0, UNIT, 0.0, 1.0, 10)
    nuis = NuisanceState(np.zeros(1), np.ones(1))
    assert log_likelihood(0, surf, nuis, data, LikelihoodSpec()) == 0.0


@pytest.mark.parametrize("family", ["gaussian", "binomial"])
def test_loglik_delta_matches_full_difference(family):
    rng = np.random.default_rng(7)
    surf = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
    x = rng.uniform(size=(80, 2))
    if family == "gaussian":
        y = surf.evaluate_many(x) + 0.1 * rng.standard_normal(80)
        data = Dataset((RegionData(x, y),))
        lik = LikelihoodSpec()
    else:
        prob = 1.0 / (1.0 + np.exp(-surf.evaluate_many(x)))
        y = rng.binomial(20, prob).astype(float)
        data = Dataset((RegionData(x, y, np.full(80, 20)),))
        lik = LikelihoodSpec(family=BINOMIAL)
    nuis = NuisanceState(np.array([0.05]), np.array([0.01]))
    for _ in range(10):
        xi = (float(rng.uniform(0.01, 1.0)), float(rng.uniform(0.01, 1.0)))
        lo, hi = surf.birth_level_bounds(xi)
        if hi <= lo:
            continue
        new = surf.apply_birth((xi, float(rng.uniform(lo, hi))))
        delta = log_likelihood_delta(0, surf, new, nuis, data, lik)
        full = log_likelihood(0, new, nuis, data, lik) - log_likelihood(
            0, surf, nuis, data, lik
        )
        assert delta == pytest.approx(full, abs=1e-9)


def test_loglik_delta_identical_surfaces_zero():
    surf, data, nuis, _ = gaussian_setup()
    assert log_likelihood_delta(0, surf, surf, nuis, data, LikelihoodSpec()) == 0.0


def test_sigma2_gibbs_matches_conjugate_moments():
    # with fixed residuals the draws are iid Inverse-Gamma(a + T/2, b + SS/2)
    surf, data, nuis, _ = gaussian_setup(seed=3, count=100)
    lik = LikelihoodSpec(sigma2_prior=(2.0, 0.1))
    rng = np.random.default_rng(17)
    draws = np.array(
        [gibbs_update_sigma2(0, surf, nuis, data, lik, rng) for _ in range(4000)]
    )
    resid = data[0].y - nuis.alpha[0] - surf.evaluate_many(data[0].x)
    a_post = 2.0 + 50.0
    b_post = 0.1 + 0.5 * float(np.sum(resid**2))
    expected_mean = b_post / (a_post - 1.0)
    assert np.mean(draws) == pytest.approx(expected_mean, rel=0.02)
    expected_var = b_post**2 / ((a_post - 1.0) ** 2 * (a_post - 2.0))
    assert np.var(draws) == pytest.approx(expected_var, rel=0.15)


def test_sigma2_gibbs_without_data_samples_prior():
    data = Dataset((RegionData(np.zeros((0, 2)), np.zeros(0)),))
    surf = constant_surface(0, UNIT, 0.0, 1.0, 10)
    nuis = NuisanceState(np.zeros(1), np.ones(1))
    lik = LikelihoodSpec(sigma2_prior=(4.0, 1.5))
    rng = np.random.default_rng(5)
    draws = np.array(
        [gibbs_update_sigma2(0, surf, nuis, data, lik, rng) for _ in range(4000)]
    )
    assert np.mean(draws) == pytest.approx(1.5 / 3.0, rel=0.05)


def test_initial_nuisance_fixed_values():
    lik = LikelihoodSpec(baseline=BaselineSpec(kind="fixed", values=(0.2, -0.1)))
    nuis = initial_nuisance(2, lik)
    assert np.array_equal(nuis.alpha, [0.2, -0.1])


def test_car_alpha_stationary_variance():
    # two regions, no data: the centred baseline difference is marginally a
    # scaled Student-t with variance rate / (shape - 1)
    shape, scale = 3.0, 1.0
    lik = LikelihoodSpec(
        baseline=BaselineSpec(kind="car", tau_prior=(shape, scale), proposal_sd=0.8,
                              center=True)
    )
    graph = RegionGraph.from_edges((UNIT, UNIT), [(0, 1)])
    data = Dataset(tuple(RegionData(np.zeros((0, 2)), np.zeros(0)) for _ in range(2)))
    surfaces = [constant_surface(k, UNIT, 0.0, 1.0, 10) for k in range(2)]
    nuis = initial_nuisance(2, lik)
    rng = np.random.default_rng(23)
    deltas = []
    for it in range(30_000):
        nuis = mh_update_alpha(nuis, surfaces, data, graph, lik, rng)
        if it >= 2000:
            deltas.append(nuis.alpha[0] - nuis.alpha[1])
    deltas = np.asarray(deltas)
    expected_var = (1.0 / scale) / (shape - 1.0)
    assert np.mean(deltas) == pytest.approx(0.0, abs=0.05)
    assert np.var(deltas) == pytest.approx(expected_var, rel=0.25)


def test_car_centering_flag():
    lik = LikelihoodSpec(baseline=BaselineSpec(kind="car", center=True))
    graph = RegionGraph.from_edges((UNIT, UNIT), [(0, 1)])
    data = Dataset(tuple(RegionData(np.zeros((0, 2)), np.zeros(0)) for _ in range(2)))
    surfaces = [constant_surface(k, UNIT, 0.0, 1.0, 10) for k in range(2)]
    nuis = initial_nuisance(2, lik)
    rng = np.random.default_rng(2)
    for _ in range(50):
        nuis = mh_update_alpha(nuis, surfaces, data, graph, lik, rng)
        assert np.sum(nuis.alpha) == pytest.approx(0.0, abs=1e-12)


def test_predictive_mean_constant_chain():
    from bsmmr.rjmcmc import Chain, SamplerSchedule
    from bsmmr.domain import PriorConfig, validate_problem

    graph = RegionGraph.from_edges((UNIT,), [])
    data = Dataset((RegionData(np.zeros((0, 2)), np.zeros(0)),))
    problem = validate_problem(
        graph, data, PriorConfig(omega=0.0, eta=2.0), LikelihoodSpec()
    )
    surf = constant_surface(0, UNIT, 0.0, 1.0, 10).apply_birth(((0.5, 0.5), 0.6))
    chain = Chain(problem, SamplerSchedule(iterations=1))
    chain.samples = [
        ((surf,), NuisanceState(np.array([0.1]), np.ones(1))),
        ((surf,), NuisanceState(np.array([0.3]), np.ones(1))),
    ]
    # mean alpha 0.2 plus the surface level
    assert predictive_mean(0, np.array([0.7, 0.7]), chain, LikelihoodSpec()) == pytest.approx(0.8)
    assert predictive_mean(0, np.array([0.2, 0.2]), chain, LikelihoodSpec()) == pytest.approx(0.2)
    many = predictive_mean_many(0, np.array([[0.7, 0.7], [0.2, 0.2]]), chain, LikelihoodSpec())
    assert many == pytest.approx([0.8, 0.2])


def test_predictive_mean_errors():
    from bsmmr.rjmcmc import Chain, SamplerSchedule
    from bsmmr.domain import PriorConfig, validate_problem
    from bsmmr.errors import EmptyChain, OutOfDomain

    graph = RegionGraph.from_edges((UNIT,), [])
    data = Dataset((RegionData(np.zeros((0, 2)), np.zeros(0)),))
    problem = validate_problem(
        graph, data, PriorConfig(omega=0.0, eta=2.0), LikelihoodSpec()
    )
    chain = Chain(problem, SamplerSchedule(iterations=1))
    with pytest.raises(EmptyChain):
        predictive_mean(0, np.array([0.5, 0.5]), chain, LikelihoodSpec())
    surf = constant_surface(0, UNIT, 0.0, 1.0, 10)
    chain.samples = [((surf,), NuisanceState(np.zeros(1), np.ones(1)))]
    with pytest.raises(OutOfDomain):
        predictive_mean(0, np.array([1.5, 0.5]), chain, LikelihoodSpec())
