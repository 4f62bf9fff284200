"""Exact pairwise discrepancy between piecewise-constant monotone surfaces.

The integrand compares offset levels (level - delta_min), so results are
invariant to translating the [delta_min, delta_max] interval and the +1 guard
keeps negative exponents numerically stable. Integrals are exact sums of
cell volume times the integrand of the two constant levels on a rectangular
decomposition induced by the surfaces' point coordinates.
"""

from __future__ import annotations

import warnings

import numpy as np

from .domain import CovariateBox, PriorConfig, Problem
from .errors import DomainNotCovered
from .surface import MonotoneSurface, _axis_breaks, _cells_from_breaks, _surface_diff


def integrand(level_a, level_b, p: float, q: float):
    """Pointwise discrepancy |(1+a)^p - (1+b)^p| * |a - b|^q for offset levels.

    Defined as 0 when the levels are equal (covers the 0^0 case at q = 0).
    """
    a = np.asarray(level_a, dtype=float)
    b = np.asarray(level_b, dtype=float)
    diff = np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.abs((1.0 + a) ** p - (1.0 + b) ** p)
        gap = np.where(diff > 0, diff**q, 0.0)
    out = np.where(diff > 0, base * gap, 0.0)
    return out if out.ndim else float(out)


def _check_domain(surf: MonotoneSurface, domain: CovariateBox):
    box = surf.sampling_box
    for d in range(domain.dim):
        if domain.lower[d] < box.lower[d] - 1e-12 or domain.upper[d] > box.upper[d] + 1e-12:
            raise DomainNotCovered(
                f"integration domain axis {d} not covered by region {surf.region} surface"
            )


def dpq(
    surf_a: MonotoneSurface,
    surf_b: MonotoneSurface,
    p: float,
    q: float,
    domain: CovariateBox,
) -> float:
    """Exact integral of the discrepancy integrand over ``domain``."""
    _check_domain(surf_a, domain)
    _check_domain(surf_b, domain)
    if p == 0.0:
        warnings.warn("p = 0 makes the discrepancy identically zero", stacklevel=2)
        return 0.0
    breaks = _axis_breaks((surf_a, surf_b), domain.lower, domain.upper)
    mid, _, _, vol = _cells_from_breaks(breaks)
    lev_a = surf_a.evaluate_many(mid) - surf_a.delta_min
    lev_b = surf_b.evaluate_many(mid) - surf_b.delta_min
    return float(np.sum(vol * integrand(lev_a, lev_b, p, q)))


def dpq_delta(
    surf_old: MonotoneSurface,
    surf_new: MonotoneSurface,
    surf_other: MonotoneSurface,
    p: float,
    q: float,
    domain: CovariateBox,
) -> float:
    """dpq(new, other) - dpq(old, other), integrated only over the cells of the
    changed region intersected with ``domain``. Exact."""
    _check_domain(surf_old, domain)
    _check_domain(surf_other, domain)
    if p == 0.0:
        return 0.0
    touched = _surface_diff(surf_old, surf_new)
    if not touched:
        return 0.0
    dim = surf_old.dim
    corner = tuple(
        max(min(xi[d] for xi in touched), domain.lower[d]) for d in range(dim)
    )
    if any(corner[d] >= domain.upper[d] for d in range(dim)):
        return 0.0
    breaks = _axis_breaks((surf_old, surf_new, surf_other), corner, domain.upper)
    mid, _, _, vol = _cells_from_breaks(breaks)
    lev_old = surf_old.evaluate_many(mid) - surf_old.delta_min
    lev_new = surf_new.evaluate_many(mid) - surf_new.delta_min
    changed = lev_old != lev_new
    if not changed.any():
        return 0.0
    lev_oth = surf_other.evaluate_many(mid[changed]) - surf_other.delta_min
    contrib = integrand(lev_new[changed], lev_oth, p, q) - integrand(
        lev_old[changed], lev_oth, p, q
    )
    return float(np.sum(vol[changed] * contrib))


def prior_log_ratio(
    k: int,
    surf_old: MonotoneSurface,
    surf_new: MonotoneSurface,
    surfaces,
    problem: Problem,
    delta_n: int,
) -> float:
    """Log ratio of the joint Gibbs prior after replacing region k's surface.

    delta_n is the net point-count change of the move (-1, 0 or +1).
    """
    prior: PriorConfig = problem.prior
    total = delta_n * np.log1p(-1.0 / prior.eta)
    if prior.omega > 0:
        for kp in problem.graph.neighbours(k):
            domain = problem.pair_domain(k, kp)
            if domain is None:
                continue
            d = problem.graph.weights[k, kp]
            total -= prior.omega * d * dpq_delta(
                surf_old, surf_new, surfaces[kp], prior.p, prior.q, domain
            )
    return float(total)
