"""Synthetic data generators: monotone truth families, Gaussian/Binomial
response synthesis and the built-in five-region network topologies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CovariateBox, Dataset, RegionData, RegionGraph, INTERSECTION
from .errors import BadHyperparameter

UNIT_SQUARE = CovariateBox((0.0, 0.0), (1.0, 1.0))


@dataclass(frozen=True)
class TrueFunction:
    """Closed-form monotone surface used as simulation ground truth.

    Kinds (with unit coordinates u = (x - lower)/(upper - lower)):
      constant           level ``high`` everywhere
      step               jump from ``low`` to ``high`` on the upper orthant of ``corner``
      staircase          ``steps`` equal jumps along the diagonal
      smooth             low + (high - low) * prod(u)
      smooth_plus_step   average of smooth and step
      axis_staircase     staircase in the single axis ``axis`` (others redundant)
    """

    kind: str
    low: float = 0.0
    high: float = 1.0
    corner: tuple = (0.5, 0.5)
    steps: int = 4
    axis: int = 0
    box: CovariateBox = field(default_factory=lambda: UNIT_SQUARE)

    def __post_init__(self):
        if self.high < self.low:
            raise BadHyperparameter("true function requires high >= low")
        self._audit_monotone()

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = np.asarray(self.box.lower)
        hi = np.asarray(self.box.upper)
        u = (x - lo) / (hi - lo)
        span = self.high - self.low
        if self.kind == "constant":
            return np.full(x.shape[0], self.high)
        if self.kind == "step":
            above = (u >= np.asarray(self.corner)).all(axis=1)
            return np.where(above, self.high, self.low)
        if self.kind == "staircase":
            corners = (np.arange(1, self.steps + 1) - 0.5) / self.steps
            hit = (u[:, None, :] >= corners[None, :, None]).all(axis=2).sum(axis=1)
            return self.low + span * hit / self.steps
        if self.kind == "smooth":
            return self.low + span * np.prod(np.clip(u, 0.0, 1.0), axis=1)
        if self.kind == "smooth_plus_step":
            smooth = self.low + span * np.prod(np.clip(u, 0.0, 1.0), axis=1)
            above = (u >= np.asarray(self.corner)).all(axis=1)
            stepped = np.where(above, self.high, self.low)
            return 0.5 * (smooth + stepped)
        if self.kind == "axis_staircase":
            corners = (np.arange(1, self.steps + 1) - 0.5) / self.steps
            hit = (u[:, self.axis, None] >= corners[None, :]).sum(axis=1)
            return self.low + span * hit / self.steps
        raise BadHyperparameter(f"unknown true-function kind {self.kind!r}")

    def _audit_monotone(self, pairs: int = 2000, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        lo = np.asarray(self.box.lower)
        hi = np.asarray(self.box.upper)
        a = rng.uniform(lo, hi, size=(pairs, len(lo)))
        b = rng.uniform(a, hi)
        if np.any(self(a) > self(b) + 1e-12):
            raise BadHyperparameter(f"true function {self.kind!r} is not monotone")

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "low": self.low,
            "high": self.high,
            "corner": list(self.corner),
            "steps": self.steps,
            "axis": self.axis,
            "box": {"lower": list(self.box.lower), "upper": list(self.box.upper)},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TrueFunction":
        return cls(
            kind=doc["kind"],
            low=doc["low"],
            high=doc["high"],
            corner=tuple(doc["corner"]),
            steps=doc["steps"],
            axis=doc["axis"],
            box=CovariateBox(doc["box"]["lower"], doc["box"]["upper"]),
        )


def _sample_covariates(box: CovariateBox, count, sampling, rng) -> np.ndarray:
    """Uniform sampling, or a split count above/below a threshold corner."""
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    if sampling == "uniform":
        return rng.uniform(lo, hi, size=(count, len(lo)))
    mode, corner, n_above = sampling
    if mode != "split":
        raise BadHyperparameter(f"unknown sampling law {sampling!r}")
    corner = lo + np.asarray(corner) * (hi - lo)
    above = rng.uniform(corner, hi, size=(n_above, len(lo)))
    below = []
    while len(below) < count - n_above:
        cand = rng.uniform(lo, hi, size=(count, len(lo)))
        keep = ~(cand >= corner).all(axis=1)
        below.extend(cand[keep])
    below = np.asarray(below[: count - n_above])
    return np.concatenate([above, below], axis=0)


def gen_gaussian(truths, alphas, sigmas, counts, boxes, seed, sampling=None) -> Dataset:
    """Gaussian responses y ~ N(alpha_k + truth_k(x), sigma_k^2)."""
    rng = np.random.default_rng(seed)
    if np.any(np.asarray(sigmas) < 0):
        raise BadHyperparameter("sigmas must be nonnegative")
    regions = []
    for k, truth in enumerate(truths):
        law = sampling[k] if sampling is not None else "uniform"
        x = _sample_covariates(boxes[k], counts[k], law, rng)
        mean = alphas[k] + truth(x)
        y = mean + sigmas[k] * rng.standard_normal(counts[k])
        regions.append(RegionData(x, y))
    return Dataset(tuple(regions))


def gen_binomial(truths, trials, counts, boxes, seed, alphas=None, sampling=None) -> Dataset:
    """Binomial responses y ~ Binomial(trials, logistic(alpha_k + truth_k(x)))."""
    rng = np.random.default_rng(seed)
    if trials < 1:
        raise BadHyperparameter("trials must be >= 1")
    regions = []
    for k, truth in enumerate(truths):
        law = sampling[k] if sampling is not None else "uniform"
        x = _sample_covariates(boxes[k], counts[k], law, rng)
        alpha = 0.0 if alphas is None else alphas[k]
        prob = 1.0 / (1.0 + np.exp(-(alpha + truth(x))))
        y = rng.binomial(trials, prob).astype(float)
        regions.append(RegionData(x, y, np.full(counts[k], trials)))
    return Dataset(tuple(regions))


def builtin_networks() -> dict:
    """The two five-region topologies: a chain and a hub around region 2.

    The hub network also carries the varying first-covariate ranges used to
    exercise intersection/union integration domains.
    """
    chain_boxes = tuple(UNIT_SQUARE for _ in range(5))
    chain5 = RegionGraph.from_edges(chain_boxes, [(0, 1), (1, 2), (2, 3), (3, 4)])
    hub_ranges = [(0.0, 0.7), (0.2, 1.0), (0.0, 0.7), (0.1, 0.9), (0.0, 0.7)]
    hub_boxes = tuple(
        CovariateBox((lo, 0.0), (hi, 1.0)) for lo, hi in hub_ranges
    )
    hub5 = RegionGraph.from_edges(
        hub_boxes, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 4), (1, 3)], INTERSECTION
    )
    return {"chain5": chain5, "hub5": hub5}
