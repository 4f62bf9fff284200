import math

import numpy as np
import pytest

from bsmmr.discrepancy import dpq, dpq_delta, integrand, prior_log_ratio
from bsmmr.domain import (
    CovariateBox,
    Dataset,
    LikelihoodSpec,
    PriorConfig,
    RegionData,
    RegionGraph,
    validate_problem,
)
from bsmmr.errors import DomainNotCovered
from bsmmr.surface import MonotoneSurface, constant_surface, random_monotone_surface

UNIT = CovariateBox((0.0, 0.0), (1.0, 1.0))


def one_step_surface(level, corner=(0.5, 0.5), delta_min=0.0):
    subs = {3: ((corner, level),)}
    return MonotoneSurface(0, UNIT, delta_min, max(1.0, level), 10, subs)


def riemann_dpq(a, b, p, q, domain, grid=200):
    axes = [
        domain.lower[d] + (np.arange(grid) + 0.5) * (domain.upper[d] - domain.lower[d]) / grid
        for d in range(domain.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    lev_a = a.evaluate_many(pts) - a.delta_min
    lev_b = b.evaluate_many(pts) - b.delta_min
    return float(np.sum(integrand(lev_a, lev_b, p, q)) * domain.volume() / pts.shape[0])


def test_integrand_zero_when_equal():
    assert integrand(0.7, 0.7, 2.0, 1.0) == 0.0
    assert integrand(0.7, 0.7, 2.0, 0.0) == 0.0  # the 0^0 convention


def test_integrand_closed_form():
    # |(1.4)^2 - 1| * 0.4 = 0.96 * 0.4
    assert integrand(0.0, 0.4, 2.0, 1.0) == pytest.approx(0.96 * 0.4, rel=1e-12)
    # negative exponent stays finite thanks to the +1 guard
    assert integrand(0.0, 1.0, -1.0, 1.0) == pytest.approx(0.5, rel=1e-12)


def test_integrand_anchor_ratio():
    ratio = integrand(4.0, 4.1, 2.0, 1.0) / integrand(0.0, 0.1, 2.0, 1.0)
    assert ratio == pytest.approx(0.101 / 0.021, rel=1e-12)
    assert abs(ratio - 4.81) <= 0.01


def test_dpq_single_step_closed_form():
    # one step of height h on the upper-right quadrant against the flat surface
    h = 0.4
    a = one_step_surface(h)
    b = constant_surface(1, UNIT, 0.0, 1.0, 10)
    for p, q in ((1.0, 1.0), (2.0, 1.0), (0.5, 2.0), (-1.0, 1.0)):
        expected = abs((1 + h) ** p - 1.0) * h**q * 0.25
        assert dpq(a, b, p, q, UNIT) == pytest.approx(expected, rel=1e-12)


def test_dpq_symmetric():
    rng = np.random.default_rng(11)
    a = random_monotone_surface(rng, UNIT, 0.0, 1.0, 7)
    b = random_monotone_surface(rng, UNIT, 0.0, 1.0, 7)
    assert dpq(a, b, 1.5, 1.0, UNIT) == pytest.approx(dpq(b, a, 1.5, 1.0, UNIT), rel=1e-12)


def test_dpq_identical_surfaces_zero():
    rng = np.random.default_rng(12)
    a = random_monotone_surface(rng, UNIT, 0.0, 1.0, 7)
    assert dpq(a, a, 1.0, 1.0, UNIT) == 0.0


def test_dpq_offset_invariance():
    # shifting [delta_min, delta_max] rigidly must not change the discrepancy
    h = 0.4
    a0 = one_step_surface(h)
    b0 = constant_surface(1, UNIT, 0.0, 1.0, 10)
    a1 = MonotoneSurface(0, UNIT, -2.0, -1.0, 10, {3: (((0.5, 0.5), -2.0 + h),)})
    b1 = MonotoneSurface(1, UNIT, -2.0, -1.0, 10, {})
    assert dpq(a1, b1, 1.3, 1.2, UNIT) == pytest.approx(
        dpq(a0, b0, 1.3, 1.2, UNIT), rel=1e-12
    )


def test_dpq_matches_riemann_oracle():
    rng = np.random.default_rng(21)
    for _ in range(3):
        a = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
        b = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
        for p, q in ((1.0, 1.0), (0.5, 1.0), (-1.0, 1.0), (3.0, 1.0)):
            exact = dpq(a, b, p, q, UNIT)
            approx = riemann_dpq(a, b, p, q, UNIT)
            assert exact == pytest.approx(approx, rel=1e-2)


def test_dpq_p_zero_warns_and_returns_zero():
    a = one_step_surface(0.4)
    b = constant_surface(1, UNIT, 0.0, 1.0, 10)
    with pytest.warns(UserWarning):
        assert dpq(a, b, 0.0, 1.0, UNIT) == 0.0


def test_dpq_domain_not_covered():
    small = CovariateBox((0.0, 0.0), (0.5, 0.5))
    a = constant_surface(0, small, 0.0, 1.0, 10)
    b = constant_surface(1, UNIT, 0.0, 1.0, 10)
    with pytest.raises(DomainNotCovered):
        dpq(a, b, 1.0, 1.0, UNIT)


def test_dpq_delta_matches_full_difference():
    rng = np.random.default_rng(31)
    for _ in range(10):
        old = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
        other = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
        xi = (float(rng.uniform(0.01, 1.0)), float(rng.uniform(0.01, 1.0)))
        lo, hi = old.birth_level_bounds(xi)
        if hi <= lo:
            continue
        new = old.apply_birth((xi, float(rng.uniform(lo, hi))))
        for p, q in ((1.0, 1.0), (0.5, 1.0), (-1.0, 2.0)):
            delta = dpq_delta(old, new, other, p, q, UNIT)
            full = dpq(new, other, p, q, UNIT) - dpq(old, other, p, q, UNIT)
            assert delta == pytest.approx(full, abs=1e-10)


def test_dpq_delta_on_subdomain():
    dom = CovariateBox((0.2, 0.2), (0.8, 0.8))
    rng = np.random.default_rng(32)
    old = random_monotone_surface(rng, UNIT, 0.0, 1.0, 6)
    other = random_monotone_surface(rng, UNIT, 0.0, 1.0, 6)
    new = old.apply_birth(((0.4, 0.4), old.birth_level_bounds((0.4, 0.4))[1]))
    delta = dpq_delta(old, new, other, 1.0, 1.0, dom)
    full = dpq(new, other, 1.0, 1.0, dom) - dpq(old, other, 1.0, 1.0, dom)
    assert delta == pytest.approx(full, abs=1e-10)


def test_dpq_delta_outside_domain_is_zero():
    dom = CovariateBox((0.0, 0.0), (0.5, 0.5))
    old = constant_surface(0, UNIT, 0.0, 1.0, 10)
    other = constant_surface(1, UNIT, 0.0, 1.0, 10)
    new = old.apply_birth(((0.7, 0.7), 0.5))
    assert dpq_delta(old, new, other, 1.0, 1.0, dom) == 0.0


def _two_region_problem(omega, eta=2.0):
    graph = RegionGraph.from_edges((UNIT, UNIT), [(0, 1)])
    data = Dataset(tuple(RegionData(np.zeros((0, 2)), np.zeros(0)) for _ in range(2)))
    prior = PriorConfig(omega=omega, eta=eta, delta_min=0.0, delta_max=1.0, n_max=20)
    return validate_problem(graph, data, prior, LikelihoodSpec())


def test_prior_log_ratio_decoupled():
    problem = _two_region_problem(omega=0.0, eta=4.0)
    old = constant_surface(0, UNIT, 0.0, 1.0, 20)
    new = old.apply_birth(((0.5, 0.5), 0.4))
    surfaces = [old, constant_surface(1, UNIT, 0.0, 1.0, 20)]
    lp = prior_log_ratio(0, old, new, surfaces, problem, delta_n=1)
    assert lp == pytest.approx(math.log(1.0 - 1.0 / 4.0), rel=1e-12)


def test_prior_log_ratio_with_coupling():
    problem = _two_region_problem(omega=3.0, eta=2.0)
    old = constant_surface(0, UNIT, 0.0, 1.0, 20)
    new = old.apply_birth(((0.5, 0.5), 0.4))
    flat = constant_surface(1, UNIT, 0.0, 1.0, 20)
    surfaces = [old, flat]
    lp = prior_log_ratio(0, old, new, surfaces, problem, delta_n=1)
    expected = math.log(0.5) - 3.0 * (
        dpq(new, flat, 1.0, 1.0, UNIT) - dpq(old, flat, 1.0, 1.0, UNIT)
    )
    assert lp == pytest.approx(expected, abs=1e-12)
