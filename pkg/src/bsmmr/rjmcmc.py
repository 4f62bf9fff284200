"""Reversible-jump sampler over all regional surfaces.

One sweep updates every region in ascending order by proposing one of Birth,
Death or Shift on a uniformly chosen subprocess, then refreshes the nuisance
parameters (noise variances by Gibbs, CAR baselines by Metropolis). Proposal
log-ratios follow the standard birth/death bookkeeping with the death's
reverse-birth interval computed on the surface with the point removed, i.e.
the configuration the reverse move would see.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discrepancy import prior_log_ratio
from .domain import GAUSSIAN, Problem
from .errors import BsmmrError
from .likelihood import (
    NuisanceState,
    gibbs_update_sigma2,
    initial_nuisance,
    log_likelihood_delta,
    mh_update_alpha,
)
from .surface import MonotoneSurface, constant_surface, subprocess_masks

BIRTH = "birth"
DEATH = "death"
SHIFT = "shift"
MOVES = (BIRTH, DEATH, SHIFT)


@dataclass(frozen=True)
class SamplerSchedule:
    iterations: int
    burn_in: int = 0
    thin: int = 1
    trace_points: tuple = ()  # per region: tuple of covariate locations
    seed: int = 0

    def __post_init__(self):
        if self.burn_in > self.iterations:
            raise BsmmrError("burn_in must not exceed iterations")
        if self.thin < 1:
            raise BsmmrError("thin must be >= 1")

    @property
    def sample_count(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class Proposal:
    kind: str
    region: int
    mask: int
    payload: object
    log_proposal_ratio: float
    new_surface: MonotoneSurface
    delta_n: int


@dataclass
class InstantReject:
    kind: str
    region: int
    reason: str


@dataclass
class SamplerState:
    surfaces: list
    nuisance: NuisanceState

    def copy(self) -> "SamplerState":
        return SamplerState(list(self.surfaces), self.nuisance.copy())


def initial_state(problem: Problem) -> SamplerState:
    prior = problem.prior
    surfaces = [
        constant_surface(k, problem.sampling_boxes[k], prior.delta_min, prior.delta_max, prior.n_max)
        for k in range(problem.graph.region_count)
    ]
    return SamplerState(surfaces, initial_nuisance(problem.graph.region_count, problem.likelihood))


def _pick_move(move_probs, u: float) -> str:
    if u < move_probs[0]:
        return BIRTH
    if u < move_probs[0] + move_probs[1]:
        return DEATH
    return SHIFT


def propose(state: SamplerState, k: int, problem: Problem, rng: np.random.Generator):
    """Draw one proposal for region k. InstantReject is a normal outcome."""
    surface = state.surfaces[k]
    masks = subprocess_masks(surface.dim)
    mask = masks[int(rng.integers(len(masks)))]
    move = _pick_move(problem.prior.move_probs, float(rng.uniform()))
    p_birth, p_death, _ = problem.prior.move_probs

    if move == BIRTH:
        if surface.point_count >= surface.n_max:
            return InstantReject(BIRTH, k, "capacity")
        lo, hi = surface.sampling_box.lower, surface.sampling_box.upper
        xi = tuple(
            float(rng.uniform(lo[d], hi[d])) if mask >> d & 1 else lo[d]
            for d in range(surface.dim)
        )
        b_l, b_u = surface.birth_level_bounds(xi)
        width = b_u - b_l
        if width <= 0.0:
            return InstantReject(BIRTH, k, "degenerate level interval")
        level = float(rng.uniform(b_l, b_u))
        new_surface = surface.apply_birth((xi, level))
        n_i = len(surface.points(mask))
        if p_death == 0.0:
            return InstantReject(BIRTH, k, "irreversible move kind")
        lpr = math.log(surface.subspace_volume(mask) * width / (n_i + 1))
        if p_death != p_birth:
            lpr += math.log(p_death / p_birth)
        return Proposal(BIRTH, k, mask, (xi, level), lpr, new_surface, +1)

    if move == DEATH:
        pts = surface.points(mask)
        if not pts:
            return InstantReject(DEATH, k, "empty subprocess")
        j = int(rng.integers(len(pts)))
        new_surface = surface.apply_death(mask, j)
        b_l, b_u = new_surface.birth_level_bounds(pts[j][0])
        width = b_u - b_l
        if width <= 0.0:
            return InstantReject(DEATH, k, "unreversible removal")
        if p_birth == 0.0:
            return InstantReject(DEATH, k, "irreversible move kind")
        lpr = math.log(len(pts) / (surface.subspace_volume(mask) * width))
        if p_death != p_birth:
            lpr += math.log(p_birth / p_death)
        return Proposal(DEATH, k, mask, j, lpr, new_surface, -1)

    # Shift
    pts = surface.points(mask)
    if not pts:
        return InstantReject(SHIFT, k, "empty subprocess")
    weights = [lv - surface.delta_min for _, lv in pts]
    total = sum(weights)
    if total > 0.0:
        u = float(rng.uniform()) * total
        acc = 0.0
        j = len(pts) - 1
        for idx, w in enumerate(weights):
            acc += w
            if u < acc:
                j = idx
                break
        p_fwd = weights[j] / total
        if p_fwd == 0.0:
            return InstantReject(SHIFT, k, "zero-weight selection")
    else:
        j = int(rng.integers(len(pts)))
        p_fwd = 1.0 / len(pts)
    old_xi, old_level = pts[j]

    loc_bounds = surface.shift_location_bounds(mask, j)
    vol_fwd = 1.0
    new_xi = list(surface.sampling_box.lower)
    axes = [d for d in range(surface.dim) if mask >> d & 1]
    for (lb, ub), d in zip(loc_bounds, axes):
        vol_fwd *= ub - lb
        new_xi[d] = float(rng.uniform(lb, ub))
    new_xi = tuple(new_xi)
    if vol_fwd <= 0.0:
        return InstantReject(SHIFT, k, "degenerate location box")

    without = surface.apply_death(mask, j)
    b_l, b_u = without.birth_level_bounds(new_xi)
    len_fwd = b_u - b_l
    if len_fwd <= 0.0:
        return InstantReject(SHIFT, k, "degenerate level interval")
    new_level = float(rng.uniform(b_l, b_u))
    try:
        new_surface = without.apply_birth((new_xi, new_level))
    except BsmmrError:
        return InstantReject(SHIFT, k, "invalid shifted point")
    if new_surface.classify(new_xi) != mask:
        return InstantReject(SHIFT, k, "subprocess change")

    new_pts = new_surface.points(mask)
    j_new = len(new_pts) - 1  # moved point is appended last
    new_weights = [lv - surface.delta_min for _, lv in new_pts]
    new_total = sum(new_weights)
    if new_total > 0.0:
        p_rev = new_weights[j_new] / new_total
        if p_rev == 0.0:
            return InstantReject(SHIFT, k, "irreversible selection")
    else:
        p_rev = 1.0 / len(new_pts)
    rev_bounds = new_surface.shift_location_bounds(mask, j_new)
    vol_rev = 1.0
    for (lb, ub), d in zip(rev_bounds, axes):
        vol_rev *= ub - lb
        if not lb < old_xi[d] < ub:
            return InstantReject(SHIFT, k, "irreversible location")
    r_l, r_u = without.birth_level_bounds(old_xi)
    len_rev = r_u - r_l
    if len_rev <= 0.0:
        return InstantReject(SHIFT, k, "irreversible level interval")
    lpr = (
        math.log(p_rev / p_fwd)
        + math.log(vol_fwd / vol_rev)
        + math.log(len_fwd / len_rev)
    )
    return Proposal(SHIFT, k, mask, (j, (new_xi, new_level)), lpr, new_surface, 0)


def acceptance_log_ratio(proposal: Proposal, state: SamplerState, problem: Problem) -> float:
    """log R = likelihood delta + prior log-ratio + proposal log-ratio."""
    k = proposal.region
    old = state.surfaces[k]
    new = proposal.new_surface
    ll = log_likelihood_delta(k, old, new, state.nuisance, problem.data, problem.likelihood)
    lp = prior_log_ratio(k, old, new, state.surfaces, problem, proposal.delta_n)
    return ll + lp + proposal.log_proposal_ratio


def step(
    state: SamplerState,
    problem: Problem,
    rng: np.random.Generator,
    counters: Optional[dict] = None,
) -> SamplerState:
    """One full sweep: each region in turn, then one nuisance update pass."""
    for k in range(problem.graph.region_count):
        prop = propose(state, k, problem, rng)
        if isinstance(prop, InstantReject):
            if counters is not None:
                counters[prop.kind]["proposed"] += 1
                counters[prop.kind]["instant_rejected"] += 1
            continue
        log_r = acceptance_log_ratio(prop, state, problem)
        accept = log_r >= 0.0 or float(rng.uniform()) < math.exp(log_r)
        if counters is not None:
            counters[prop.kind]["proposed"] += 1
            if accept:
                counters[prop.kind]["accepted"] += 1
        if accept:
            state.surfaces[k] = prop.new_surface

    lik = problem.likelihood
    data = problem.data
    needs_lam = lik.family == GAUSSIAN or lik.baseline.kind == "car"
    if needs_lam:
        lam_values = [
            state.surfaces[k].evaluate_many(data[k].x) if data[k].count else None
            for k in range(problem.graph.region_count)
        ]
        if lik.family == GAUSSIAN:
            for k in range(problem.graph.region_count):
                state.nuisance.sigma2[k] = gibbs_update_sigma2(
                    k, state.surfaces[k], state.nuisance, data, lik, rng, lam=lam_values[k]
                )
        if lik.baseline.kind == "car":
            state.nuisance = mh_update_alpha(
                state.nuisance, state.surfaces, data, problem.graph, lik, rng,
                lam_values=lam_values,
            )
    return state


def empty_counters() -> dict:
    return {m: {"proposed": 0, "accepted": 0, "instant_rejected": 0} for m in MOVES}


@dataclass
class Chain:
    """Thinned posterior samples plus acceptance counters and trace series."""

    problem: Problem
    schedule: SamplerSchedule
    samples: list = field(default_factory=list)  # (surfaces tuple, NuisanceState)
    counters: dict = field(default_factory=empty_counters)
    trace: dict = field(default_factory=dict)  # region -> (iterations, n_points) array

    def acceptance_rates(self) -> dict:
        out = {}
        for move, c in self.counters.items():
            out[move] = c["accepted"] / c["proposed"] if c["proposed"] else float("nan")
        return out


def run(
    problem: Problem,
    schedule: SamplerSchedule,
    state: Optional[SamplerState] = None,
    rng: Optional[np.random.Generator] = None,
    start_iteration: int = 0,
    chain: Optional[Chain] = None,
) -> Chain:
    """Run the sampler for schedule.iterations sweeps, storing every
    ``thin``-th post-burn-in state. Deterministic under a fixed seed."""
    if state is None:
        state = initial_state(problem)
    if rng is None:
        rng = np.random.default_rng(schedule.seed)
    if chain is None:
        chain = Chain(problem, schedule)
        for k, pts in enumerate(schedule.trace_points):
            if len(pts):
                chain.trace[k] = np.zeros((schedule.iterations, len(pts)))
    else:
        chain.schedule = schedule
    trace_arrays = {
        k: (np.asarray(pts, dtype=float), chain.trace[k])
        for k, pts in enumerate(schedule.trace_points)
        if len(pts) and k in chain.trace
    }
    for it in range(start_iteration + 1, schedule.iterations + 1):
        post_burn = it > schedule.burn_in
        step(state, problem, rng, counters=chain.counters if post_burn else None)
        for k, (pts, arr) in trace_arrays.items():
            arr[it - 1] = state.surfaces[k].evaluate_many(pts)
        if post_burn and (it - schedule.burn_in) % schedule.thin == 0:
            chain.samples.append((tuple(state.surfaces), state.nuisance.copy()))
    chain.final_state = state
    chain.final_rng_state = rng.bit_generator.state
    return chain


# ---------------------------------------------------------------------------
# Checkpoint / restore
# ---------------------------------------------------------------------------

def _nuisance_to_doc(n: NuisanceState) -> dict:
    return {"alpha": n.alpha.tolist(), "sigma2": n.sigma2.tolist(), "tau": n.tau}


def _nuisance_from_doc(doc: dict) -> NuisanceState:
    return NuisanceState(
        np.asarray(doc["alpha"], dtype=float),
        np.asarray(doc["sigma2"], dtype=float),
        float(doc["tau"]),
    )


def save_checkpoint(path, chain: Chain, iteration: Optional[int] = None) -> None:
    """Persist sampler state, rng stream, counters and stored samples.

    Trace series are written separately (see write_trace_csv); they are not
    part of the checkpoint.
    """
    state = chain.final_state
    doc = {
        "iteration": iteration if iteration is not None else chain.schedule.iterations,
        "schedule": {
            "iterations": chain.schedule.iterations,
            "burn_in": chain.schedule.burn_in,
            "thin": chain.schedule.thin,
            "seed": chain.schedule.seed,
        },
        "rng_state": chain.final_rng_state,
        "surfaces": [s.to_records() for s in state.surfaces],
        "nuisance": _nuisance_to_doc(state.nuisance),
        "counters": chain.counters,
        "samples": [
            {
                "surfaces": [s.to_records() for s in surfaces],
                "nuisance": _nuisance_to_doc(nuisance),
            }
            for surfaces, nuisance in chain.samples
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, problem: Problem):
    """Restore (chain, state, rng, iteration) from a checkpoint file."""
    with open(path) as fh:
        doc = json.load(fh)
    prior = problem.prior

    def surfaces_from(records):
        return [
            MonotoneSurface.from_records(
                rec, k, problem.sampling_boxes[k], prior.delta_min, prior.delta_max, prior.n_max
            )
            for k, rec in enumerate(records)
        ]

    sched = SamplerSchedule(**doc["schedule"])
    state = SamplerState(surfaces_from(doc["surfaces"]), _nuisance_from_doc(doc["nuisance"]))
    chain = Chain(problem, sched, counters=doc["counters"])
    for sample in doc["samples"]:
        chain.samples.append(
            (tuple(surfaces_from(sample["surfaces"])), _nuisance_from_doc(sample["nuisance"]))
        )
    rng = np.random.default_rng()
    rng_state = doc["rng_state"]
    rng_state["state"] = {k: int(v) for k, v in rng_state["state"].items()}
    rng.bit_generator.state = rng_state
    chain.final_state = state
    chain.final_rng_state = rng.bit_generator.state
    return chain, state, rng, int(doc["iteration"])


def write_trace_csv(path, chain: Chain) -> None:
    """Trace series as CSV rows (sweep, region, point_index, level)."""
    with open(path, "w") as fh:
        fh.write("sweep,region,point_index,level\n")
        for k, arr in chain.trace.items():
            for it in range(arr.shape[0]):
                for p in range(arr.shape[1]):
                    fh.write(f"{it + 1},{k},{p},{arr[it, p]!r}\n")
