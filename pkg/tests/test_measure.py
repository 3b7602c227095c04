import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from flagdepth.measure import (
    AxisCauchyMixture,
    CauchyProduct,
    DiracAtom,
    FiniteAtomic,
    FlagHalfspace2D,
    Halfspace,
    Measure,
    MeasureError,
    UniformDisk,
    axis_cauchy,
    cauchy_with_center_atom,
    disk_with_atom,
    dump_measure,
    load_measure,
    measure_from_json,
    measure_to_json,
    spec_hash,
)

SQ2 = math.sqrt(2)
DISK = Measure(((UniformDisk((0, 0), 2.0, 1.0), 1),))
TWO_ATOMS = Measure.atomic([((0, 0), 1), ((1, 1), 2)])


def unit(theta):
    return (math.cos(theta), math.sin(theta))


# halfspaces -------------------------------------------------------------------


def test_halfspace_rejects_non_unit_normal():
    with pytest.raises(MeasureError):
        Halfspace((1.0, 1.0), 0.0)


def test_halfspace_through_keeps_rationals_exact():
    h = Halfspace.through((Fraction(1, 3), 0), (1, 1))
    assert h.contains((Fraction(1, 3), 0))
    assert not h.contains((Fraction(1, 3), 0), closed=False)
    assert h.contains((0, Fraction(1, 3)))
    assert not h.contains((0, Fraction(1, 3) - Fraction(1, 10 ** 30)))


def test_complement_swaps_open_and_closed():
    h = Halfspace.through((1, 1), (1, 1))
    assert TWO_ATOMS.halfspace_mass(h).exact + TWO_ATOMS.open_halfspace_mass(h.complement()).exact == 3


# closed and open masses --------------------------------------------------------


def test_disk_half():
    assert DISK.halfspace_mass(Halfspace((1.0, 0.0), 0.0)).value == pytest.approx(0.5, abs=1e-15)


def test_disk_segment():
    got = DISK.halfspace_mass(Halfspace((1.0, 0.0), SQ2)).value
    assert got == pytest.approx((math.pi - 2) / (4 * math.pi), abs=1e-12)


def test_atomic_boundary_atom_is_counted():
    h = Halfspace.through((1, 1), (1, 1))
    m = TWO_ATOMS.halfspace_mass(h)
    assert m.exact == 2 and m.is_exact
    assert TWO_ATOMS.open_halfspace_mass(h).exact == 0


def test_cauchy_weighted_tail():
    m = Measure(((CauchyProduct(2), Fraction(1, 2)),))
    assert m.halfspace_mass(Halfspace((1.0, 0.0), 1.0)).value == pytest.approx(0.125, abs=1e-15)


def test_axis_open_halfplane_drops_the_boundary_axis():
    m = axis_cauchy()
    h = Halfspace.through((0, 0), (0, 1))
    assert m.open_halfspace_mass(h).value == pytest.approx(0.25, abs=1e-15)
    assert m.halfspace_mass(h).value == pytest.approx(0.75, abs=1e-15)


def test_disk_open_equals_closed():
    for k in range(20):
        h = Halfspace(unit(0.3 * k), 0.1 * k - 1)
        assert DISK.open_halfspace_mass(h).value == DISK.halfspace_mass(h).value


def test_mixed_query_is_not_exact():
    m = disk_with_atom()
    assert not m.halfspace_mass(Halfspace((1.0, 0.0), 0.0)).is_exact
    assert m.total_mass().value == pytest.approx(1.1)


# lines, rays, points, flags ------------------------------------------------------


def test_line_through_atom():
    m = Measure.atomic([((1, 1), Fraction(1, 10))])
    assert m.line_mass((1, 0), (0, 1)).exact == Fraction(1, 10)
    assert DISK.line_mass((0, 0), (1, 0)).value == 0


def test_axis_ray_mass():
    got = axis_cauchy().ray_mass((1, 0), (1, 0)).value
    assert got == pytest.approx(0.5 * (0.5 - math.atan(1) / math.pi), abs=1e-15)


def test_point_mass_needs_exact_location():
    m = disk_with_atom()
    assert m.point_mass((1, 1)).exact == Fraction(1, 10)
    assert m.point_mass((1 + 1e-9, 1)).value == 0


def test_flag_mass_at_unattained_point():
    m = disk_with_atom()
    base = 1 / 3 - math.sqrt(3) / (4 * math.pi)
    away = FlagHalfspace2D.exact((1, 0), (1, 0), (0, -1))
    toward = FlagHalfspace2D.exact((1, 0), (1, 0), (0, 1))
    assert m.flag_mass(away).value == pytest.approx(base, abs=1e-12)
    assert m.flag_mass(toward).value == pytest.approx(base + 0.1, abs=1e-12)


def test_flag_containing_support_has_full_mass():
    f = FlagHalfspace2D.exact((-10, 0), (1, 0), (0, 1))
    assert TWO_ATOMS.flag_mass(f).exact == 3


def test_flag_rejects_non_orthogonal_ray():
    with pytest.raises(MeasureError):
        FlagHalfspace2D.exact((0, 0), (1, 0), (1, 1))


# construction errors -------------------------------------------------------------


@pytest.mark.parametrize("bad", [
    lambda: FiniteAtomic((((0, 0), 1), ((0, 0), 2))),
    lambda: FiniteAtomic((((0, 0), 0),)),
    lambda: UniformDisk((0, 0), 0.0),
    lambda: DiracAtom((0, 0), -1),
    lambda: Measure(((DISK.components[0][0], 0),)),
])
def test_invalid_measures_are_rejected(bad):
    with pytest.raises(MeasureError):
        bad()


# spec files ----------------------------------------------------------------------------


@pytest.mark.parametrize("m", [
    TWO_ATOMS,
    disk_with_atom(),
    cauchy_with_center_atom(),
    axis_cauchy(),
    Measure.atomic([((Fraction(1, 3), Fraction(-2, 7)), Fraction(5, 11))]),
])
def test_spec_round_trip(m, tmp_path):
    path = tmp_path / "m.json"
    dump_measure(m, path)
    back = load_measure(path)
    assert back == m
    assert spec_hash(back) == spec_hash(m)


def test_spec_accepts_rational_strings_and_numbers():
    m = measure_from_json({"components": [
        {"type": "finite_atomic", "atoms": [[0, 0, "1/3"], ["1/2", 1, 2]], "weight": 1}]})
    assert m.atoms() == {(0, 0): Fraction(1, 3), (Fraction(1, 2), 1): 2}


@pytest.mark.parametrize("obj", [
    {"components": [{"type": "finite_atomic", "atoms": [[0, 0, 1]], "weight": 1, "colour": 1}]},
    {"components": [{"type": "blob"}]},
    {"components": [], "extra": 1},
    {"components": [{"type": "finite_atomic", "atoms": [[0, 0, "one"]], "weight": 1}]},
    [],
])
def test_spec_rejects_bad_input(obj):
    with pytest.raises(MeasureError):
        measure_from_json(obj)


def test_spec_json_is_canonical():
    a = json.dumps(measure_to_json(disk_with_atom()), sort_keys=True)
    b = json.dumps(measure_to_json(disk_with_atom()), sort_keys=True)
    assert a == b


# properties ------------------------------------------------------------------------------

coords = st.integers(-4, 4)
atom_lists = st.lists(st.tuples(st.tuples(coords, coords), st.integers(1, 5)),
                      min_size=1, max_size=7, unique_by=lambda a: a[0])
normals = st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda v: v != (0, 0))


@given(atom_lists, st.tuples(coords, coords), normals)
def test_open_closed_line_sandwich(atoms, p, n):
    m = Measure.atomic(atoms)
    h = Halfspace.through(p, n)
    closed = m.halfspace_mass(h).exact
    opened = m.open_halfspace_mass(h).exact
    line = m.line_mass(p, (-n[1], n[0])).exact
    assert opened <= closed == opened + line
    assert closed + m.open_halfspace_mass(h.complement()).exact == m.total_mass().exact


@given(atom_lists, st.tuples(coords, coords), normals, st.booleans())
def test_flag_between_open_and_closed(atoms, p, n, flip):
    m = Measure.atomic(atoms)
    r = (-n[1], n[0]) if flip else (n[1], -n[0])
    f = FlagHalfspace2D.exact(p, n, r)
    h = Halfspace.through(p, n)
    assert m.open_halfspace_mass(h).exact <= m.flag_mass(f).exact <= m.halfspace_mass(h).exact


@settings(max_examples=60)
@given(st.floats(0, 2 * math.pi), st.floats(-6, 6), st.floats(-3, 3), st.floats(-3, 3))
def test_cauchy_matches_quadrature(theta, c, cx, cy):
    u = unit(theta)
    comp = CauchyProduct(2, (cx, cy))
    closed = comp.halfspace_mass(Halfspace(u, c))
    # P(<u, X> >= c): integrate the coordinate with the smaller normal component
    # against the Cauchy tail of the other one; x = center + tan(s) makes the
    # Cauchy density uniform in s
    i = 0 if abs(u[0]) <= abs(u[1]) else 1
    j = 1 - i
    ctr = (cx, cy)

    def integrand(s):
        rest = c - u[i] * (ctr[i] + math.tan(s))
        tail = 0.5 - math.atan(rest / u[j] - ctr[j]) / math.pi
        return (tail if u[j] > 0 else 1 - tail) / math.pi

    # the integrated coordinate matters where |u_i x| ~ 1, far out when u_i is small
    scale = 1 / max(abs(u[i]), 1e-300)
    pts = sorted({math.atan(k * scale) * sg for k in (0.01, 0.1, 1, 10, 100) for sg in (1, -1)})
    quad, _ = integrate.quad(integrand, -math.pi / 2, math.pi / 2, epsabs=1e-13, epsrel=1e-13,
                             limit=800, points=pts)
    assert closed == pytest.approx(quad, abs=1e-8)


def test_disk_matches_quadrature_on_random_chords():
    rng = np.random.default_rng(3)
    for _ in range(30):
        u = unit(rng.uniform(0, 2 * math.pi))
        c = rng.uniform(-2.5, 2.5)
        got = DISK.halfspace_mass(Halfspace(u, c)).value
        # area of {t >= c} slices of a radius-2 disk
        area, _ = integrate.quad(lambda t: 2 * math.sqrt(max(4 - t * t, 0.0)), max(c, -2), 2)
        assert got == pytest.approx(area / (4 * math.pi), abs=1e-9)


def test_axis_mixture_parallel_boundary_is_all_or_nothing():
    m = Measure(((AxisCauchyMixture(2), 1),))
    above = Halfspace.through((0, 1), (0, 1))
    below = Halfspace.through((0, -1), (0, 1))
    assert m.halfspace_mass(above).value == pytest.approx(0.5 * (0.5 - math.atan(1) / math.pi))
    assert m.halfspace_mass(below).value == pytest.approx(0.5 + 0.5 * (0.5 + math.atan(1) / math.pi))
