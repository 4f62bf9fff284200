"""Marked-point-process representation of one region's piecewise-constant
monotone function.

A surface stores support points grouped by subprocess. Subprocess ``i`` is
encoded as a bitmask over axes: a location belongs to subprocess ``i`` iff its
coordinate lies strictly above the sampling box's lower bound exactly on the
axes set in the mask and at the lower bound elsewhere. The functional level at
``x`` is the highest mark among stored points dominated by ``x``, defaulting
to ``delta_min``.

Surfaces are value-semantic: mutating operations return a new surface and
share the untouched subprocess point lists with the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CovariateBox
from .errors import (
    CapacityExceeded,
    EmptySubprocess,
    MonotoneViolation,
    OutOfDomain,
)


def active_axes(mask: int) -> tuple:
    """0-based axes set in a subprocess bitmask."""
    return tuple(d for d in range(mask.bit_length()) if mask >> d & 1)


def subprocess_masks(dim: int) -> tuple:
    """All nonempty axis subsets for an m-dimensional covariate space."""
    return tuple(range(1, 1 << dim))


def dominates(a, b) -> bool:
    """Componentwise a <= b; ties count as domination in both directions."""
    return all(u <= v for u, v in zip(a, b))


@dataclass(frozen=True)
class MonotoneSurface:
    region: int
    sampling_box: CovariateBox
    delta_min: float
    delta_max: float
    n_max: int
    subprocesses: dict = field(default_factory=dict)  # mask -> tuple of (xi, level)

    @property
    def dim(self) -> int:
        return self.sampling_box.dim

    @property
    def point_count(self) -> int:
        return sum(len(pts) for pts in self.subprocesses.values())

    def points(self, mask: int) -> tuple:
        return self.subprocesses.get(mask, ())

    def iter_points(self):
        for mask, pts in self.subprocesses.items():
            for j, (xi, level) in enumerate(pts):
                yield mask, j, xi, level

    def classify(self, xi) -> int:
        """Subprocess bitmask of a location (0 if all coords at the lower bound)."""
        lo = self.sampling_box.lower
        mask = 0
        for d, (v, l) in enumerate(zip(xi, lo)):
            if v > l:
                mask |= 1 << d
        return mask

    def in_subspace(self, mask: int, xi) -> bool:
        if not self.sampling_box.contains(xi):
            return False
        return self.classify(xi) == mask

    def subspace_volume(self, mask: int) -> float:
        """Lebesgue volume |X_{k,i}| of the subprocess sample space."""
        v = 1.0
        lo, hi = self.sampling_box.lower, self.sampling_box.upper
        for d in active_axes(mask):
            v *= hi[d] - lo[d]
        return v

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x) -> float:
        if not self.sampling_box.contains(x):
            raise OutOfDomain(f"x={tuple(x)} outside sampling box")
        best = self.delta_min
        for pts in self.subprocesses.values():
            for xi, level in pts:
                if level > best and all(u <= v for u, v in zip(xi, x)):
                    best = level
        return best

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; x has shape (N, m), assumed inside the box."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        locs, levels = self._arrays()
        if levels.size == 0:
            return np.full(x.shape[0], self.delta_min)
        dominated = (locs[None, :, :] <= x[:, None, :]).all(axis=2)
        vals = np.where(dominated, levels[None, :], -np.inf).max(axis=1)
        return np.maximum(vals, self.delta_min)

    def _arrays(self):
        cached = self.__dict__.get("_cache")
        if cached is None:
            flat = [(xi, level) for pts in self.subprocesses.values() for xi, level in pts]
            if flat:
                locs = np.asarray([xi for xi, _ in flat])
                levels = np.asarray([lv for _, lv in flat])
            else:
                locs = np.zeros((0, self.dim))
                levels = np.zeros(0)
            cached = (locs, levels)
            object.__setattr__(self, "_cache", cached)
        return cached

    # -- proposal bounds ----------------------------------------------------

    def birth_level_bounds(self, xi) -> tuple:
        """Monotone level interval [b_l, b_u] for a point born at ``xi``.

        The lower bound comes from the marks of dominated points (not from raw
        evaluation) so level-redundant points cannot be born below the surface.
        """
        lo, hi = self.delta_min, self.delta_max
        for pts in self.subprocesses.values():
            for loc, level in pts:
                below = all(u <= v for u, v in zip(loc, xi))
                above = all(u >= v for u, v in zip(loc, xi))
                if below and level > lo:
                    lo = level
                if above and level < hi:
                    hi = level
        return lo, hi

    def shift_location_bounds(self, mask: int, j: int) -> tuple:
        """Open per-axis interval for shifting point ``j`` of subprocess ``mask``.

        Bounds on each active axis are the nearest coordinates among the other
        points of the same subprocess, falling back to the box bounds.
        """
        pts = self.points(mask)
        if not pts:
            raise EmptySubprocess(f"subprocess {mask} has no points")
        xi = pts[j][0]
        box_lo, box_hi = self.sampling_box.lower, self.sampling_box.upper
        bounds = []
        for d in active_axes(mask):
            lb, ub = box_lo[d], box_hi[d]
            xd = xi[d]
            for jj, (other, _) in enumerate(pts):
                if jj == j:
                    continue
                c = other[d]
                if c < xd and c > lb:
                    lb = c
                elif c > xd and c < ub:
                    ub = c
            bounds.append((lb, ub))
        return tuple(bounds)

    # -- monotone-consistent mutation ----------------------------------------

    def apply_birth(self, point) -> "MonotoneSurface":
        xi, level = tuple(point[0]), float(point[1])
        if self.point_count >= self.n_max:
            raise CapacityExceeded(f"surface already holds n_max={self.n_max} points")
        mask = self.classify(xi)
        if mask == 0:
            raise MonotoneViolation("birth location coincides with the box origin")
        if not self.sampling_box.contains(xi):
            raise OutOfDomain(f"birth location {xi} outside sampling box")
        for pts in self.subprocesses.values():
            for loc, _ in pts:
                if loc == xi:
                    raise MonotoneViolation(f"location {xi} already occupied")
        b_l, b_u = self.birth_level_bounds(xi)
        if not b_l <= level <= b_u:
            raise MonotoneViolation(f"level {level} outside monotone interval [{b_l}, {b_u}]")
        subs = dict(self.subprocesses)
        subs[mask] = self.points(mask) + ((xi, level),)
        return MonotoneSurface(
            self.region, self.sampling_box, self.delta_min, self.delta_max, self.n_max, subs
        )

    def apply_death(self, mask: int, j: int) -> "MonotoneSurface":
        pts = self.points(mask)
        if not pts:
            raise EmptySubprocess(f"subprocess {mask} has no points")
        subs = dict(self.subprocesses)
        remaining = pts[:j] + pts[j + 1 :]
        if remaining:
            subs[mask] = remaining
        else:
            del subs[mask]
        return MonotoneSurface(
            self.region, self.sampling_box, self.delta_min, self.delta_max, self.n_max, subs
        )

    def apply_shift(self, mask: int, j: int, new_point) -> "MonotoneSurface":
        without = self.apply_death(mask, j)
        shifted = without.apply_birth(new_point)
        if shifted.classify(tuple(new_point[0])) != mask:
            raise MonotoneViolation("shift may not change the subprocess of a point")
        return shifted

    def subset_emptiness(self) -> dict:
        """Per-subprocess emptiness flags over all 2^m - 1 axis subsets."""
        return {
            mask: len(self.points(mask)) == 0 for mask in subprocess_masks(self.dim)
        }

    # -- serialization -------------------------------------------------------

    def to_records(self) -> list:
        return [
            {"subset": [d + 1 for d in active_axes(mask)], "location": list(xi), "level": level}
            for mask, j, xi, level in self.iter_points()
        ]

    @classmethod
    def from_records(cls, records, region, sampling_box, delta_min, delta_max, n_max):
        surf = cls(region, sampling_box, delta_min, delta_max, n_max, {})
        subs = {}
        for rec in records:
            xi = tuple(float(v) for v in rec["location"])
            mask = surf.classify(xi)
            expected = 0
            for axis in rec["subset"]:
                expected |= 1 << (axis - 1)
            if mask != expected:
                raise MonotoneViolation(
                    f"record subset {rec['subset']} inconsistent with location {xi}"
                )
            subs.setdefault(mask, []).append((xi, float(rec["level"])))
        subs = {mask: tuple(pts) for mask, pts in subs.items()}
        return cls(region, sampling_box, delta_min, delta_max, n_max, subs)


def constant_surface(region, sampling_box, delta_min, delta_max, n_max) -> MonotoneSurface:
    """Initial state: constant at delta_min, every subprocess empty."""
    return MonotoneSurface(region, sampling_box, delta_min, delta_max, n_max, {})


def random_monotone_surface(
    rng, sampling_box, delta_min, delta_max, n_points, n_max=200, region=0
) -> MonotoneSurface:
    """Surface built from random monotone-consistent births; used by tests
    and the selftest command."""
    surf = constant_surface(region, sampling_box, delta_min, delta_max, n_max)
    masks = subprocess_masks(sampling_box.dim)
    lo, hi = sampling_box.lower, sampling_box.upper
    for _ in range(n_points):
        mask = masks[int(rng.integers(len(masks)))]
        xi = tuple(
            float(rng.uniform(lo[d], hi[d])) if mask >> d & 1 else lo[d]
            for d in range(sampling_box.dim)
        )
        b_l, b_u = surf.birth_level_bounds(xi)
        if b_u <= b_l:
            continue
        level = float(rng.uniform(b_l, b_u))
        surf = surf.apply_birth((xi, level))
    return surf


# ---------------------------------------------------------------------------
# Changed-region decomposition
# ---------------------------------------------------------------------------

def _surface_diff(before: MonotoneSurface, after: MonotoneSurface):
    """Locations touched by the single move separating two surfaces."""
    touched = []
    masks = set(before.subprocesses) | set(after.subprocesses)
    for mask in masks:
        b = before.points(mask)
        a = after.points(mask)
        if a is b:
            continue
        sb, sa = set(b), set(a)
        touched.extend(xi for xi, _ in sb ^ sa)
    return touched


def _axis_breaks(surfaces, corner, upper):
    """Per-axis sorted breakpoints of the union of point coordinates, clipped
    to the orthant (corner, upper)."""
    dim = len(corner)
    breaks = []
    for d in range(dim):
        vals = {corner[d], upper[d]}
        for surf in surfaces:
            for pts in surf.subprocesses.values():
                for xi, _ in pts:
                    if corner[d] < xi[d] < upper[d]:
                        vals.add(xi[d])
        breaks.append(np.asarray(sorted(vals)))
    return breaks


def _cells_from_breaks(breaks):
    """Cell midpoints, lower/upper corners and volumes from per-axis breaks."""
    mids = [0.5 * (b[:-1] + b[1:]) for b in breaks]
    lows = [b[:-1] for b in breaks]
    highs = [b[1:] for b in breaks]
    grids_mid = np.meshgrid(*mids, indexing="ij")
    grids_lo = np.meshgrid(*lows, indexing="ij")
    grids_hi = np.meshgrid(*highs, indexing="ij")
    mid = np.stack([g.ravel() for g in grids_mid], axis=1)
    lo = np.stack([g.ravel() for g in grids_lo], axis=1)
    hi = np.stack([g.ravel() for g in grids_hi], axis=1)
    vol = np.prod(hi - lo, axis=1)
    return mid, lo, hi, vol


def changed_cells(before: MonotoneSurface, after: MonotoneSurface, extra_surfaces=()):
    """Orthant corner and exact cell decomposition on which the two surfaces
    differ, optionally refined by the breakpoints of further surfaces.

    Returns (corner, lo, hi, vol, level_before, level_after) with arrays over
    the differing cells only; levels agree everywhere outside them.
    """
    touched = _surface_diff(before, after)
    dim = before.dim
    if not touched:
        empty = np.zeros((0, dim))
        return None, empty, empty, np.zeros(0), np.zeros(0), np.zeros(0)
    corner = tuple(min(xi[d] for xi in touched) for d in range(dim))
    upper = before.sampling_box.upper
    breaks = _axis_breaks((before, after) + tuple(extra_surfaces), corner, upper)
    mid, lo, hi, vol = _cells_from_breaks(breaks)
    lev_b = before.evaluate_many(mid)
    lev_a = after.evaluate_many(mid)
    differ = lev_b != lev_a
    return corner, lo[differ], hi[differ], vol[differ], lev_b[differ], lev_a[differ]


def changed_region(before: MonotoneSurface, after: MonotoneSurface):
    """Public form: (orthant corner, list of (cell lower, cell upper) boxes)."""
    corner, lo, hi, _, _, _ = changed_cells(before, after)
    cells = [(tuple(l), tuple(h)) for l, h in zip(lo, hi)]
    return corner, cells
