"""Post-hoc chain analysis: grid summaries, error metrics, threshold
detection and variable relevance."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyChain
from .surface import active_axes, subprocess_masks


@dataclass
class GridEstimate:
    region: int
    axes: list  # per-axis cell-centre coordinates
    mean: np.ndarray  # shape = resolution per axis
    quantiles: dict  # level -> array

    def grid_points(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass
class ThresholdReport:
    clusters: list  # dicts: location, level, mean_jump, occurrence_rate

    def to_doc(self) -> list:
        return self.clusters


def grid_summary(chain, k: int, resolution=100, quantiles=(0.05, 0.95)) -> GridEstimate:
    """Cellwise posterior mean and quantiles of alpha_k + lambda_k on a regular
    grid of cell centres. Quantiles use the lower-interpolation convention."""
    if not chain.samples:
        raise EmptyChain("chain holds no stored samples")
    box = chain.samples[0][0][k].sampling_box
    dim = box.dim
    if np.isscalar(resolution):
        resolution = (int(resolution),) * dim
    axes = [
        box.lower[d] + (np.arange(r) + 0.5) * (box.upper[d] - box.lower[d]) / r
        for d, r in enumerate(resolution)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    values = np.empty((len(chain.samples), pts.shape[0]))
    for r, (surfaces, nuisance) in enumerate(chain.samples):
        values[r] = nuisance.alpha[k] + surfaces[k].evaluate_many(pts)
    shape = tuple(resolution)
    mean = values.mean(axis=0).reshape(shape)
    qs = {
        q: np.quantile(values, q, axis=0, method="lower").reshape(shape) for q in quantiles
    }
    return GridEstimate(k, axes, mean, qs)


def mae_sd(estimate: GridEstimate, truth) -> tuple:
    """Mean absolute error and standard deviation of (estimate - truth) over
    the grid cells; truth is a callable surface."""
    diff = estimate.mean.ravel() - np.asarray(truth(estimate.grid_points())).ravel()
    return float(np.mean(np.abs(diff))), float(np.std(diff))


def _sample_jumps(surface, min_jump):
    """Support points of one sample whose removal changes the local level by
    at least min_jump, with the induced jump size."""
    out = []
    for mask, j, xi, level in surface.iter_points():
        base = surface.apply_death(mask, j).evaluate(xi)
        jump = level - base
        if jump >= min_jump:
            out.append((xi, level, jump))
    return out


def detect_thresholds(
    chain, k: int, location_tol=0.05, level_tol=None, min_jump=None
) -> ThresholdReport:
    """Cluster large-jump support points across samples.

    Greedy single-pass clustering in descending jump size: a point joins an
    existing cluster when its location is within location_tol in max-norm and
    its level within level_tol; the occurrence rate of a cluster is the
    fraction of samples contributing at least one point to it.
    """
    if not chain.samples:
        raise EmptyChain("chain holds no stored samples")
    prior = chain.problem.prior
    span = prior.delta_max - prior.delta_min
    if min_jump is None:
        min_jump = 0.1 * span
    if level_tol is None:
        level_tol = 0.1 * span

    candidates = []  # (jump, sample index, location, level)
    for r, (surfaces, _) in enumerate(chain.samples):
        for xi, level, jump in _sample_jumps(surfaces[k], min_jump):
            candidates.append((jump, r, np.asarray(xi), level))
    candidates.sort(key=lambda c: -c[0])

    clusters = []  # dict: loc, level, jumps, samples
    for jump, r, xi, level in candidates:
        placed = False
        for cl in clusters:
            if (
                np.max(np.abs(xi - cl["loc"])) <= location_tol
                and abs(level - cl["level"]) <= level_tol
            ):
                cl["jumps"].append(jump)
                cl["samples"].add(r)
                placed = True
                break
        if not placed:
            clusters.append({"loc": xi, "level": level, "jumps": [jump], "samples": {r}})

    n_samples = len(chain.samples)
    report = [
        {
            "location": [float(v) for v in cl["loc"]],
            "level": float(cl["level"]),
            "mean_jump": float(np.mean(cl["jumps"])),
            "occurrence_rate": len(cl["samples"]) / n_samples,
        }
        for cl in clusters
    ]
    report.sort(key=lambda c: -c["occurrence_rate"])
    return ThresholdReport(report)


def variable_relevance(chain, k: int, redundancy_threshold=0.9) -> dict:
    """Per-subprocess emptiness frequencies and per-axis redundancy flags.

    Axis d is flagged redundant when every subprocess with axis d active is
    empty in at least redundancy_threshold of the samples.
    """
    if not chain.samples:
        raise EmptyChain("chain holds no stored samples")
    dim = chain.samples[0][0][k].dim
    masks = subprocess_masks(dim)
    empty_counts = {mask: 0 for mask in masks}
    axis_empty_counts = [0] * dim
    for surfaces, _ in chain.samples:
        flags = surfaces[k].subset_emptiness()
        for mask in masks:
            if flags[mask]:
                empty_counts[mask] += 1
        for d in range(dim):
            if all(flags[mask] for mask in masks if mask >> d & 1):
                axis_empty_counts[d] += 1
    n = len(chain.samples)
    return {
        "subprocess_empty_prob": {
            "+".join(str(a + 1) for a in active_axes(mask)): empty_counts[mask] / n
            for mask in masks
        },
        "axis_redundancy_prob": [c / n for c in axis_empty_counts],
        "redundant_axes": [
            d + 1 for d, c in enumerate(axis_empty_counts) if c / n >= redundancy_threshold
        ],
    }


def write_grid_csv(path, estimate: GridEstimate) -> None:
    """Long-form CSV: x1, ..., xm, mean, then one column per quantile."""
    pts = estimate.grid_points()
    dim = pts.shape[1]
    qlevels = sorted(estimate.quantiles)
    with open(path, "w") as fh:
        header = [f"x{d + 1}" for d in range(dim)] + ["mean"] + [f"q{q}" for q in qlevels]
        fh.write(",".join(header) + "\n")
        mean = estimate.mean.ravel()
        qcols = [estimate.quantiles[q].ravel() for q in qlevels]
        for i in range(pts.shape[0]):
            row = [repr(float(v)) for v in pts[i]] + [repr(float(mean[i]))]
            row += [repr(float(c[i])) for c in qcols]
            fh.write(",".join(row) + "\n")


def write_report_json(path, threshold_report: ThresholdReport, relevance: dict) -> None:
    with open(path, "w") as fh:
        json.dump(
            {"thresholds": threshold_report.to_doc(), "relevance": relevance}, fh, indent=2
        )
