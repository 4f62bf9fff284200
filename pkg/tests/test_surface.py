import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsmmr.domain import CovariateBox
from bsmmr.errors import (
    CapacityExceeded,
    EmptySubprocess,
    MonotoneViolation,
    OutOfDomain,
)
from bsmmr.surface import (
    MonotoneSurface,
    active_axes,
    changed_region,
    constant_surface,
    random_monotone_surface,
    subprocess_masks,
)

UNIT = CovariateBox((0.0, 0.0), (1.0, 1.0))


def make_surface():
    """Hand-built surface: two diagonal points and one axis-1 point."""
    subs = {
        3: (((0.3, 0.3), 0.5), ((0.6, 0.6), 0.8)),
        1: (((0.5, 0.0), 0.2),),
    }
    return MonotoneSurface(0, UNIT, 0.0, 1.0, 10, subs)


def test_masks_and_axes():
    assert subprocess_masks(2) == (1, 2, 3)
    assert active_axes(3) == (0, 1)
    assert active_axes(2) == (1,)


def test_classify():
    s = constant_surface(0, UNIT, 0.0, 1.0, 10)
    assert s.classify((0.0, 0.0)) == 0
    assert s.classify((0.5, 0.0)) == 1
    assert s.classify((0.0, 0.3)) == 2
    assert s.classify((0.2, 0.7)) == 3


def test_evaluate_hand_oracle():
    s = make_surface()
    assert s.evaluate((0.4, 0.4)) == 0.5
    assert s.evaluate((0.7, 0.7)) == 0.8
    assert s.evaluate((0.55, 0.1)) == 0.2
    assert s.evaluate((0.2, 0.2)) == 0.0
    assert s.evaluate((0.6, 0.6)) == 0.8


def test_evaluate_out_of_domain():
    s = make_surface()
    with pytest.raises(OutOfDomain):
        s.evaluate((1.5, 0.5))


def test_evaluate_many_matches_scalar():
    rng = np.random.default_rng(0)
    s = random_monotone_surface(rng, UNIT, 0.0, 1.0, 12)
    x = rng.uniform(size=(200, 2))
    vec = s.evaluate_many(x)
    scalar = np.array([s.evaluate(row) for row in x])
    assert np.array_equal(vec, scalar)


def test_birth_level_bounds_hand_oracle():
    s = make_surface()
    assert s.birth_level_bounds((0.4, 0.4)) == (0.5, 0.8)
    assert s.birth_level_bounds((0.7, 0.7)) == (0.8, 1.0)
    assert s.birth_level_bounds((0.1, 0.1)) == (0.0, 0.5)


def test_shift_location_bounds_hand_oracle():
    s = make_surface()
    assert s.shift_location_bounds(3, 0) == ((0.0, 0.6), (0.0, 0.6))
    assert s.shift_location_bounds(3, 1) == ((0.3, 1.0), (0.3, 1.0))
    assert s.shift_location_bounds(1, 0) == ((0.0, 1.0),)
    with pytest.raises(EmptySubprocess):
        s.shift_location_bounds(2, 0)


def test_apply_birth_and_death():
    s = make_surface()
    s2 = s.apply_birth(((0.45, 0.45), 0.6))
    assert s2.point_count == 4
    assert s2.evaluate((0.5, 0.5)) == 0.6
    assert s.point_count == 3  # value semantics
    s3 = s2.apply_death(3, 2)
    assert s3.evaluate((0.5, 0.5)) == 0.5
    assert s3.point_count == 3


def test_apply_birth_rejects_violations():
    s = make_surface()
    with pytest.raises(MonotoneViolation):
        s.apply_birth(((0.3, 0.3), 0.9))  # occupied location
    with pytest.raises(MonotoneViolation):
        s.apply_birth(((0.4, 0.4), 0.4))  # below dominated mark
    with pytest.raises(MonotoneViolation):
        s.apply_birth(((0.0, 0.0), 0.5))  # box origin
    small = MonotoneSurface(0, UNIT, 0.0, 1.0, 3, s.subprocesses)
    with pytest.raises(CapacityExceeded):
        small.apply_birth(((0.9, 0.9), 0.9))


def test_apply_shift_preserves_subprocess():
    s = make_surface()
    shifted = s.apply_shift(3, 0, ((0.35, 0.35), 0.55))
    assert shifted.point_count == 3
    assert shifted.evaluate((0.4, 0.4)) == 0.55
    with pytest.raises(MonotoneViolation):
        s.apply_shift(3, 0, ((0.35, 0.0), 0.1))  # would move to subprocess 1


def test_subspace_volume():
    box = CovariateBox((0.0, 1.0), (2.0, 5.0))
    s = constant_surface(0, box, 0.0, 1.0, 10)
    assert s.subspace_volume(1) == 2.0
    assert s.subspace_volume(2) == 4.0
    assert s.subspace_volume(3) == 8.0


def test_subset_emptiness():
    s = make_surface()
    flags = s.subset_emptiness()
    assert flags == {1: False, 2: True, 3: False}


def test_changed_region_for_birth():
    s = make_surface()
    s2 = s.apply_birth(((0.45, 0.45), 0.6))
    corner, cells = changed_region(s, s2)
    assert corner == (0.45, 0.45)
    total = sum(
        (hi[0] - lo[0]) * (hi[1] - lo[1]) for lo, hi in cells
    )
    # level rises 0.5 -> 0.6 on the upper orthant of (0.45, 0.45) except where
    # the (0.6, 0.6) point already forces 0.8
    assert total == pytest.approx(0.55**2 - 0.40**2, abs=1e-12)


def test_changed_region_identical_surfaces_empty():
    s = make_surface()
    corner, cells = changed_region(s, s)
    assert corner is None
    assert cells == []


def test_records_roundtrip_bit_exact():
    rng = np.random.default_rng(3)
    s = random_monotone_surface(rng, UNIT, -0.5, 1.5, 10)
    records = s.to_records()
    back = MonotoneSurface.from_records(records, 0, UNIT, -0.5, 1.5, 200)
    assert back.subprocesses == s.subprocesses
    x = rng.uniform(size=(50, 2))
    assert np.array_equal(back.evaluate_many(x), s.evaluate_many(x))


def test_from_records_rejects_inconsistent_subset():
    rec = [{"subset": [1], "location": [0.5, 0.5], "level": 0.3}]
    with pytest.raises(MonotoneViolation):
        MonotoneSurface.from_records(rec, 0, UNIT, 0.0, 1.0, 10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(0, 25))
def test_random_surfaces_are_monotone(seed, n):
    rng = np.random.default_rng(seed)
    s = random_monotone_surface(rng, UNIT, 0.0, 1.0, n)
    u = rng.uniform(size=(40, 2))
    v = rng.uniform(u, 1.0)
    assert np.all(s.evaluate_many(u) <= s.evaluate_many(v))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_birth_level_bounds_keep_monotone(seed):
    rng = np.random.default_rng(seed)
    s = random_monotone_surface(rng, UNIT, 0.0, 1.0, 8)
    xi = (float(rng.uniform(1e-6, 1.0)), float(rng.uniform(1e-6, 1.0)))
    lo, hi = s.birth_level_bounds(xi)
    assert lo <= hi
    if hi > lo:
        s2 = s.apply_birth((xi, float(rng.uniform(lo, hi))))
        u = rng.uniform(size=(40, 2))
        v = rng.uniform(u, 1.0)
        assert np.all(s2.evaluate_many(u) <= s2.evaluate_many(v))
