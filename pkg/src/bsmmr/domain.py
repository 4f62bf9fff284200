"""Core shared types: covariate geometry, region graph, observations, configuration.

All types are immutable after validation and safe to share read-only across
concurrently running chains.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BadHyperparameter,
    DimensionMismatch,
    ObservationOutOfBox,
    TrialsMissing,
    ValidationError,
)

INTERSECTION = "intersection"
UNION = "union"

GAUSSIAN = "gaussian"
BINOMIAL = "binomial"


@dataclass(frozen=True)
class CovariateBox:
    """Axis-aligned box of per-axis bounds, in covariate units."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper):
            raise DimensionMismatch(
                f"box lower has {len(self.lower)} axes, upper has {len(self.upper)}"
            )
        if len(self.lower) < 1:
            raise DimensionMismatch("box must have at least one axis")
        for d, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise BadHyperparameter(f"box axis {d}: lower {lo} must be < upper {hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, x: Sequence[float]) -> bool:
        return all(lo <= v <= hi for lo, v, hi in zip(self.lower, x, self.upper))

    def volume(self) -> float:
        v = 1.0
        for lo, hi in zip(self.lower, self.upper):
            v *= hi - lo
        return v

    def intersect(self, other: "CovariateBox") -> Optional["CovariateBox"]:
        """Intersection box, or None when the interiors do not overlap."""
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if any(l >= h for l, h in zip(lo, hi)):
            return None
        return CovariateBox(lo, hi)

    def hull(self, other: "CovariateBox") -> "CovariateBox":
        """Smallest box containing both boxes."""
        lo = tuple(min(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(max(a, b) for a, b in zip(self.upper, other.upper))
        return CovariateBox(lo, hi)


@dataclass(frozen=True)
class RegionGraph:
    """K regions with covariate boxes and symmetric nonnegative neighbour weights."""

    boxes: tuple
    weights: np.ndarray
    domain_mode: str = INTERSECTION

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def region_count(self) -> int:
        return len(self.boxes)

    @property
    def dim(self) -> int:
        return self.boxes[0].dim

    def neighbours(self, k: int):
        """Indices k' with positive weight to region k."""
        return [j for j in range(self.region_count) if j != k and self.weights[k, j] > 0]

    @staticmethod
    def from_edges(boxes, edges, domain_mode: str = INTERSECTION) -> "RegionGraph":
        """Adjacency convenience: weight 1 for each listed pair, 0 otherwise."""
        n = len(boxes)
        w = np.zeros((n, n))
        for a, b in edges:
            w[a, b] = 1.0
            w[b, a] = 1.0
        return RegionGraph(tuple(boxes), w, domain_mode)


@dataclass(frozen=True)
class RegionData:
    """Observations for one region: covariates, responses, optional trial counts."""

    x: np.ndarray
    y: np.ndarray
    trials: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.trials is not None:
            t = np.asarray(self.trials).ravel()
            t.setflags(write=False)
            object.__setattr__(self, "trials", t)

    @property
    def count(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class Dataset:
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))

    def __getitem__(self, k: int) -> RegionData:
        return self.regions[k]

    def __len__(self) -> int:
        return len(self.regions)


@dataclass(frozen=True)
class PriorConfig:
    """Parameters of the joint surface prior and the move schedule."""

    omega: float
    eta: float
    p: float = 1.0
    q: float = 1.0
    delta_min: float = 0.0
    delta_max: float = 1.0
    n_max: int = 200
    move_probs: tuple = (0.3, 0.3, 0.4)


@dataclass(frozen=True)
class BaselineSpec:
    """Baseline level model: fixed per-region values or CAR-coupled intercepts."""

    kind: str = "fixed"  # "fixed" | "car"
    values: Optional[tuple] = None  # fixed mode: K reals (default all 0)
    tau_prior: tuple = (1.0, 100.0)  # car mode: Gamma(shape, scale)
    proposal_sd: float = 0.05
    initial: float = 0.0
    center: bool = False  # sum-to-zero recentring after each CAR sweep


@dataclass(frozen=True)
class LikelihoodSpec:
    family: str = GAUSSIAN
    sigma2_prior: tuple = (1.0, 0.005)  # Inverse-Gamma(shape, scale), Gaussian only
    baseline: BaselineSpec = field(default_factory=BaselineSpec)


@dataclass(frozen=True)
class Problem:
    """Validated aggregate of graph, data, prior and likelihood settings.

    ``sampling_boxes`` equals the per-region boxes under intersection mode and
    the common bounding box of all regions under union mode, so that every
    pairwise integration domain is covered by both surfaces.
    """

    graph: RegionGraph
    data: Dataset
    prior: PriorConfig
    likelihood: LikelihoodSpec
    sampling_boxes: tuple = ()

    def __post_init__(self):
        if not self.sampling_boxes:
            if self.graph.domain_mode == UNION:
                hull = self.graph.boxes[0]
                for b in self.graph.boxes[1:]:
                    hull = hull.hull(b)
                boxes = (hull,) * self.graph.region_count
            else:
                boxes = self.graph.boxes
            object.__setattr__(self, "sampling_boxes", boxes)

    def pair_domain(self, k: int, kp: int) -> Optional[CovariateBox]:
        """Integration domain for the (k, k') prior potential; None if empty."""
        a, b = self.graph.boxes[k], self.graph.boxes[kp]
        if self.graph.domain_mode == UNION:
            return a.hull(b)
        return a.intersect(b)

    def with_data(self, data: Dataset) -> "Problem":
        """Same settings with substituted observations (used by CV folds)."""
        return replace(self, data=data)


def validate_problem(
    graph: RegionGraph, data: Dataset, prior: PriorConfig, lik: LikelihoodSpec
) -> Problem:
    """Check every type invariant; return the Problem aggregate iff all hold.

    Raises the specific error when exactly one violation is found, and a
    ValidationError listing all of them otherwise.
    """
    violations = []

    k_regions = graph.region_count
    m = graph.boxes[0].dim
    for k, box in enumerate(graph.boxes):
        if box.dim != m:
            violations.append(
                DimensionMismatch(f"region {k} box has dimension {box.dim}, expected {m}")
            )
    w = graph.weights
    if w.shape != (k_regions, k_regions):
        violations.append(
            DimensionMismatch(f"weight matrix shape {w.shape} != ({k_regions}, {k_regions})")
        )
    else:
        if np.any(w < 0):
            violations.append(BadHyperparameter("neighbour weights must be nonnegative"))
        if not np.allclose(w, w.T):
            violations.append(BadHyperparameter("weight matrix must be symmetric"))
        if np.any(np.diag(w) != 0):
            violations.append(BadHyperparameter("weight matrix diagonal must be zero"))
    if graph.domain_mode not in (INTERSECTION, UNION):
        violations.append(BadHyperparameter(f"unknown domain mode {graph.domain_mode!r}"))

    if len(data) != k_regions:
        violations.append(
            DimensionMismatch(f"dataset has {len(data)} regions, graph has {k_regions}")
        )
    else:
        for k, reg in enumerate(data.regions):
            if reg.count and reg.x.shape[1] != m:
                violations.append(
                    DimensionMismatch(
                        f"region {k} covariates have {reg.x.shape[1]} axes, expected {m}"
                    )
                )
                continue
            box = graph.boxes[k]
            for t in range(reg.count):
                if not box.contains(reg.x[t]):
                    violations.append(
                        ObservationOutOfBox(
                            f"region {k} row {t}: x={tuple(reg.x[t])} outside box"
                        )
                    )
            if lik.family == BINOMIAL:
                if reg.trials is None:
                    violations.append(
                        TrialsMissing(f"region {k}: Binomial family requires trial counts")
                    )
                else:
                    tr = reg.trials
                    yv = reg.y
                    if np.any(tr < 1) or np.any(tr != np.floor(tr)):
                        violations.append(
                            BadHyperparameter(f"region {k}: trials must be positive integers")
                        )
                    elif np.any(yv < 0) or np.any(yv > tr) or np.any(yv != np.floor(yv)):
                        violations.append(
                            ObservationOutOfBox(
                                f"region {k}: Binomial responses must be integers in [0, trials]"
                            )
                        )
            elif reg.trials is not None:
                violations.append(
                    BadHyperparameter(f"region {k}: trials given but family is {lik.family}")
                )

    if prior.omega < 0:
        violations.append(BadHyperparameter(f"omega must be >= 0, got {prior.omega}"))
    if not prior.eta > 1:
        violations.append(BadHyperparameter(f"eta must be > 1, got {prior.eta}"))
    if prior.q < 0:
        violations.append(BadHyperparameter(f"q must be >= 0, got {prior.q}"))
    if not prior.delta_min < prior.delta_max:
        violations.append(
            BadHyperparameter(
                f"delta_min {prior.delta_min} must be < delta_max {prior.delta_max}"
            )
        )
    if prior.n_max < 1:
        violations.append(BadHyperparameter(f"n_max must be >= 1, got {prior.n_max}"))
    mp = prior.move_probs
    if len(mp) != 3 or any(v < 0 for v in mp) or abs(sum(mp) - 1.0) > 1e-12:
        violations.append(
            BadHyperparameter(f"move probabilities {mp} must be nonnegative and sum to 1")
        )

    if lik.family not in (GAUSSIAN, BINOMIAL):
        violations.append(BadHyperparameter(f"unknown likelihood family {lik.family!r}"))
    if lik.family == GAUSSIAN:
        a, b = lik.sigma2_prior
        if a <= 0 or b <= 0:
            violations.append(
                BadHyperparameter(f"Inverse-Gamma hyperparameters must be positive, got {(a, b)}")
            )
    bl = lik.baseline
    if bl.kind not in ("fixed", "car"):
        violations.append(BadHyperparameter(f"unknown baseline kind {bl.kind!r}"))
    if bl.kind == "fixed" and bl.values is not None and len(bl.values) != k_regions:
        violations.append(
            DimensionMismatch(f"baseline values have length {len(bl.values)}, expected {k_regions}")
        )
    if bl.kind == "car":
        a, b = bl.tau_prior
        if a <= 0 or b <= 0:
            violations.append(
                BadHyperparameter(f"Gamma hyperparameters must be positive, got {(a, b)}")
            )
        if bl.proposal_sd <= 0:
            violations.append(BadHyperparameter("baseline proposal sd must be positive"))

    if len(violations) == 1:
        raise violations[0]
    if violations:
        raise ValidationError(violations)
    return Problem(graph, data, prior, lik)


# ---------------------------------------------------------------------------
# External interfaces: per-region CSV observations and a JSON problem document
# ---------------------------------------------------------------------------

def read_region_csv(path, dim: int, binomial: bool) -> RegionData:
    """Read observations with header ``x1,...,xm,y[,trials]``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expect = [f"x{d + 1}" for d in range(dim)] + ["y"]
        if binomial:
            expect.append("trials")
        if [h.strip() for h in header] != expect:
            raise DimensionMismatch(f"{path}: header {header} != expected {expect}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        arr = np.zeros((0, dim))
        return RegionData(arr, np.zeros(0), np.zeros(0) if binomial else None)
    arr = np.asarray(rows)
    trials = arr[:, dim + 1] if binomial else None
    return RegionData(arr[:, :dim], arr[:, dim], trials)


def write_region_csv(path, reg: RegionData) -> None:
    dim = reg.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{d + 1}" for d in range(dim)] + ["y"]
        if reg.trials is not None:
            header.append("trials")
        writer.writerow(header)
        for t in range(reg.count):
            row = [repr(float(v)) for v in reg.x[t]] + [repr(float(reg.y[t]))]
            if reg.trials is not None:
                row.append(str(int(reg.trials[t])))
            writer.writerow(row)


def problem_from_config(doc: dict, base_dir: Path = Path(".")) -> Problem:
    """Build and validate a Problem from a JSON-like configuration document."""
    from .errors import ConfigError

    known = {"regions", "edges", "weights", "domain_mode", "prior", "likelihood"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown problem keys: {sorted(unknown)}")

    regions = doc["regions"]
    boxes = [CovariateBox(r["box"]["lower"], r["box"]["upper"]) for r in regions]
    mode = doc.get("domain_mode", INTERSECTION)
    if "weights" in doc:
        graph = RegionGraph(tuple(boxes), np.asarray(doc["weights"], dtype=float), mode)
    else:
        graph = RegionGraph.from_edges(boxes, doc.get("edges", []), mode)

    lik_doc = dict(doc.get("likelihood", {}))
    family = lik_doc.pop("family", GAUSSIAN)
    bl_doc = dict(lik_doc.pop("baseline", {}))
    baseline = BaselineSpec(
        kind=bl_doc.pop("kind", "fixed"),
        values=tuple(bl_doc.pop("values")) if "values" in bl_doc else None,
        tau_prior=tuple(bl_doc.pop("tau_prior", (1.0, 100.0))),
        proposal_sd=bl_doc.pop("proposal_sd", 0.05),
        initial=bl_doc.pop("initial", 0.0),
        center=bl_doc.pop("center", False),
    )
    if bl_doc:
        raise ConfigError(f"unknown baseline keys: {sorted(bl_doc)}")
    sigma2_prior = tuple(lik_doc.pop("sigma2_prior", (1.0, 0.005)))
    if lik_doc:
        raise ConfigError(f"unknown likelihood keys: {sorted(lik_doc)}")
    lik = LikelihoodSpec(family=family, sigma2_prior=sigma2_prior, baseline=baseline)

    pr_doc = dict(doc["prior"])
    prior = PriorConfig(
        omega=pr_doc.pop("omega", 0.0),
        eta=pr_doc.pop("eta", 2.0),
        p=pr_doc.pop("p", 1.0),
        q=pr_doc.pop("q", 1.0),
        delta_min=pr_doc.pop("delta_min", 0.0),
        delta_max=pr_doc.pop("delta_max", 1.0),
        n_max=pr_doc.pop("n_max", 200),
        move_probs=tuple(pr_doc.pop("move_probs", (0.3, 0.3, 0.4))),
    )
    if pr_doc:
        raise ConfigError(f"unknown prior keys: {sorted(pr_doc)}")

    dim = boxes[0].dim
    region_data = []
    for r in regions:
        if "data_csv" in r:
            region_data.append(
                read_region_csv(base_dir / r["data_csv"], dim, family == BINOMIAL)
            )
        else:
            region_data.append(
                RegionData(
                    np.zeros((0, dim)),
                    np.zeros(0),
                    np.zeros(0) if family == BINOMIAL else None,
                )
            )
    data = Dataset(tuple(region_data))
    return validate_problem(graph, data, prior, lik)


def load_problem(path) -> Problem:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    return problem_from_config(doc, base_dir=path.parent)
