"""Observation models and nuisance-parameter updates.

Gaussian responses use a conjugate Inverse-Gamma Gibbs step for the noise
variances. Baseline levels are either fixed or coupled through an intrinsic
CAR prior and updated by random-walk Metropolis, with the CAR precision
Gibbs-updated from its Gamma full conditional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .domain import BINOMIAL, GAUSSIAN, Dataset, LikelihoodSpec, RegionGraph
from .errors import EmptyChain, OutOfDomain
from .surface import MonotoneSurface, _surface_diff

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class NuisanceState:
    alpha: np.ndarray
    sigma2: np.ndarray
    tau: float = 1.0

    def copy(self) -> "NuisanceState":
        return NuisanceState(self.alpha.copy(), self.sigma2.copy(), self.tau)


def initial_nuisance(region_count: int, lik: LikelihoodSpec) -> NuisanceState:
    bl = lik.baseline
    if bl.kind == "fixed" and bl.values is not None:
        alpha = np.asarray(bl.values, dtype=float)
    else:
        alpha = np.full(region_count, float(bl.initial))
    a, b = lik.sigma2_prior
    sigma2 = np.full(region_count, b / a if a > 0 else 1.0)
    return NuisanceState(alpha, sigma2, 1.0)


def _gaussian_loglik(y, mean, sigma2):
    resid = y - mean
    return float(-0.5 * y.size * (LOG_2PI + np.log(sigma2)) - 0.5 * np.sum(resid**2) / sigma2)


def _binomial_loglik(y, trials, linpred):
    # log C(n, y) + y*eta - n*log(1 + exp(eta)), stable via logaddexp
    coef = gammaln(trials + 1) - gammaln(y + 1) - gammaln(trials - y + 1)
    return float(np.sum(coef + y * linpred - trials * np.logaddexp(0.0, linpred)))


def log_likelihood(
    k: int,
    surface: MonotoneSurface,
    nuisance: NuisanceState,
    data: Dataset,
    lik: LikelihoodSpec,
    lam=None,
) -> float:
    """Full data log-likelihood of region k under its current surface."""
    reg = data[k]
    if reg.count == 0:
        return 0.0
    if lam is None:
        lam = surface.evaluate_many(reg.x)
    linpred = nuisance.alpha[k] + lam
    if lik.family == GAUSSIAN:
        return _gaussian_loglik(reg.y, linpred, float(nuisance.sigma2[k]))
    return _binomial_loglik(reg.y, reg.trials, linpred)


def log_likelihood_delta(
    k: int,
    surface_old: MonotoneSurface,
    surface_new: MonotoneSurface,
    nuisance: NuisanceState,
    data: Dataset,
    lik: LikelihoodSpec,
) -> float:
    """log_likelihood(new) - log_likelihood(old), re-evaluating only the
    observations inside the move's changed orthant. Exact."""
    reg = data[k]
    if reg.count == 0:
        return 0.0
    touched = _surface_diff(surface_old, surface_new)
    if not touched:
        return 0.0
    corner = np.min(np.asarray(touched), axis=0)
    inside = (reg.x >= corner).all(axis=1)
    if not inside.any():
        return 0.0
    x = reg.x[inside]
    lam_old = surface_old.evaluate_many(x)
    lam_new = surface_new.evaluate_many(x)
    moved = lam_old != lam_new
    if not moved.any():
        return 0.0
    y = reg.y[inside][moved]
    eta_old = nuisance.alpha[k] + lam_old[moved]
    eta_new = nuisance.alpha[k] + lam_new[moved]
    if lik.family == GAUSSIAN:
        s2 = float(nuisance.sigma2[k])
        return float(np.sum((y - eta_old) ** 2 - (y - eta_new) ** 2) / (2.0 * s2))
    trials = reg.trials[inside][moved]
    return float(
        np.sum(
            y * (eta_new - eta_old)
            - trials * (np.logaddexp(0.0, eta_new) - np.logaddexp(0.0, eta_old))
        )
    )


def gibbs_update_sigma2(
    k: int,
    surface: MonotoneSurface,
    nuisance: NuisanceState,
    data: Dataset,
    lik: LikelihoodSpec,
    rng: np.random.Generator,
    lam=None,
) -> float:
    """Draw sigma2_k from its Inverse-Gamma full conditional."""
    a, b = lik.sigma2_prior
    reg = data[k]
    if reg.count:
        if lam is None:
            lam = surface.evaluate_many(reg.x)
        resid = reg.y - nuisance.alpha[k] - lam
        a = a + 0.5 * reg.count
        b = b + 0.5 * float(np.sum(resid**2))
    return float(b / rng.gamma(a))


def _connected_components(graph: RegionGraph) -> int:
    n = graph.region_count
    seen = [False] * n
    comps = 0
    for start in range(n):
        if seen[start]:
            continue
        comps += 1
        stack = [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            for v in graph.neighbours(u):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    return comps


def mh_update_alpha(
    nuisance: NuisanceState,
    surfaces,
    data: Dataset,
    graph: RegionGraph,
    lik: LikelihoodSpec,
    rng: np.random.Generator,
    lam_values=None,
) -> NuisanceState:
    """One random-walk Metropolis sweep over the CAR-coupled baselines, then a
    Gibbs update of the CAR precision from its Gamma full conditional."""
    bl = lik.baseline
    state = nuisance.copy()
    k_regions = graph.region_count
    if lam_values is None:
        lam_values = [
            surfaces[k].evaluate_many(data[k].x) if data[k].count else None
            for k in range(k_regions)
        ]
    for k in range(k_regions):
        cur = state.alpha[k]
        prop = cur + bl.proposal_sd * rng.standard_normal()
        logr = 0.0
        reg = data[k]
        if reg.count:
            lam = lam_values[k]
            if lik.family == GAUSSIAN:
                s2 = float(state.sigma2[k])
                resid = reg.y - lam
                logr += float(np.sum((resid - cur) ** 2 - (resid - prop) ** 2) / (2.0 * s2))
            else:
                d_eta = prop - cur
                logr += float(
                    np.sum(
                        reg.y * d_eta
                        - reg.trials
                        * (np.logaddexp(0.0, prop + lam) - np.logaddexp(0.0, cur + lam))
                    )
                )
        for kp in graph.neighbours(k):
            w = graph.weights[k, kp]
            other = state.alpha[kp]
            logr -= 0.5 * state.tau * w * ((prop - other) ** 2 - (cur - other) ** 2)
        if logr >= 0.0 or np.log(rng.uniform()) < logr:
            state.alpha[k] = prop
    # Gibbs update of the CAR precision from Gamma(shape, scale) prior
    shape, scale = bl.tau_prior
    ss = 0.0
    edges = 0
    for k in range(k_regions):
        for kp in range(k + 1, k_regions):
            w = graph.weights[k, kp]
            if w > 0:
                ss += w * (state.alpha[k] - state.alpha[kp]) ** 2
                edges += 1
    if edges:
        post_shape = shape + 0.5 * (k_regions - _connected_components(graph))
        post_rate = 1.0 / scale + 0.5 * ss
        state.tau = float(rng.gamma(post_shape) / post_rate)
    if bl.center:
        state.alpha -= state.alpha.mean()
    return state


def predictive_mean_many(k: int, x, chain, lik: LikelihoodSpec, trials=None) -> np.ndarray:
    """Posterior predictive functional mean at covariate points x (N, m)."""
    if not chain.samples:
        raise EmptyChain("chain holds no stored samples")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    box = chain.samples[0][0][k].sampling_box
    for row in x:
        if not box.contains(row):
            raise OutOfDomain(f"x={tuple(row)} outside region {k} sampling box")
    acc = np.zeros(x.shape[0])
    for surfaces, nuisance in chain.samples:
        linpred = nuisance.alpha[k] + surfaces[k].evaluate_many(x)
        if lik.family == BINOMIAL:
            tr = 1.0 if trials is None else np.asarray(trials, dtype=float)
            acc += tr / (1.0 + np.exp(-linpred))
        else:
            acc += linpred
    return acc / len(chain.samples)


def predictive_mean(k: int, x, chain, lik: LikelihoodSpec, trials=None) -> float:
    return float(predictive_mean_many(k, np.asarray(x)[None, :], chain, lik, trials)[0])
