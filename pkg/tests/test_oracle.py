import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flagdepth import depth as D
from flagdepth.measure import (
    AxisCauchyMixture,
    CauchyProduct,
    FlagHalfspace2D,
    Halfspace,
    Measure,
    UniformDisk,
    axis_cauchy,
    cauchy_with_center_atom,
)
from flagdepth.oracle import (
    DepthField,
    brute_force_depth_atomic,
    depth_field,
    grid_points,
    monte_carlo_mass,
    random_atomic_measure,
    sample_component,
)

DISK = UniformDisk((0, 0), 2.0)
TRIANGLE = Measure.atomic([((0, 0), 1), ((1, 0), 1), ((0, 1), 1)])


# brute force -------------------------------------------------------------------


def test_brute_force_small_cases():
    assert brute_force_depth_atomic(Measure.atomic([((1, 2), 4)]), (1, 2)) == 4
    assert brute_force_depth_atomic(Measure(()), (0, 0)) == 0
    assert brute_force_depth_atomic(TRIANGLE, (Fraction(1, 3), Fraction(1, 3))) == 1


def test_brute_force_rejects_mixtures():
    with pytest.raises(ValueError):
        brute_force_depth_atomic(cauchy_with_center_atom(), (0, 0))


# Monte Carlo ----------------------------------------------------------------------


def test_disk_segment_monte_carlo():
    est = monte_carlo_mass(DISK, Halfspace((1.0, 0.0), math.sqrt(2)), 100_000, seed=1)
    assert abs(est.estimate - (math.pi - 2) / (4 * math.pi)) < 3 * est.stderr
    assert est.stderr == pytest.approx(0.0009, abs=2e-4)


def test_cauchy_tail_monte_carlo():
    est = monte_carlo_mass(CauchyProduct(2), Halfspace((1.0, 0.0), 1.0), 100_000, seed=2)
    assert abs(est.estimate - 0.25) < 3 * est.stderr


def test_whole_plane_is_full_mass():
    far = Halfspace((1.0, 0.0), -1e300)
    assert monte_carlo_mass(CauchyProduct(2), far, 5000, seed=0).estimate == 1.0


def test_monte_carlo_flag_region():
    comp = AxisCauchyMixture(2)
    flag = FlagHalfspace2D.exact((0, 0), (0, 1), (1, 0))
    est = monte_carlo_mass(comp, flag, 50_000, seed=4)
    # open upper half of the vertical axis plus the open positive horizontal ray
    assert abs(est.estimate - 0.5) < 3 * est.stderr + 1e-12


def test_monte_carlo_is_reproducible():
    h = Halfspace((0.6, 0.8), 0.3)
    a = monte_carlo_mass(DISK, h, 10_000, seed=9)
    b = monte_carlo_mass(DISK, h, 10_000, seed=9)
    c = monte_carlo_mass(DISK, h, 10_000, seed=10)
    assert a == b and a != c


def test_monte_carlo_rejects_empty_sample():
    with pytest.raises(ValueError):
        monte_carlo_mass(DISK, Halfspace((1.0, 0.0), 0.0), 0)


def test_samples_stay_in_the_disk():
    Y = sample_component(DISK, 10_000, np.random.default_rng(0))
    assert np.all(np.hypot(Y[:, 0], Y[:, 1]) <= 2.0)


def test_axis_samples_lie_on_axes():
    Y = sample_component(AxisCauchyMixture(2), 1000, np.random.default_rng(0))
    assert np.all((Y[:, 0] == 0) | (Y[:, 1] == 0))


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-2.5, 2.5), st.integers(0, 2 ** 31))
def test_disk_closed_form_within_three_sigma(theta, c, seed):
    h = Halfspace((math.cos(theta), math.sin(theta)), c)
    est = monte_carlo_mass(DISK, h, 20_000, seed=seed)
    exact = DISK.halfspace_mass(h)
    # a sure event has zero spread; allow the 1/n granularity there
    assert abs(est.estimate - exact) <= 4 * est.stderr + 1 / 20_000


# depth fields ------------------------------------------------------------------------


def test_cauchy_fields_agree_with_closed_form():
    for m in (cauchy_with_center_atom(), axis_cauchy()):
        f = depth_field(m, (-3, -3, 3, 3), (61, 61))
        X, Y = np.meshgrid(f.xs, f.ys)
        ref = D.depth_cauchy_closed_form_np(np.stack([X, Y], axis=-1))
        assert np.max(np.abs(f.values - ref)) < 1e-6


def test_triangle_field_values():
    f = depth_field(TRIANGLE, (-1, -1, 2, 2), (31, 31))
    assert set(np.unique(f.values)) <= {0.0, 1.0}
    assert f.values.max() == 1.0


def test_field_layout_rows_follow_y():
    m = Measure.atomic([((0, 0), 1), ((2, 0), 1), ((0, 2), 1)])
    f = depth_field(m, (0, 0, 4, 2), (5, 3))
    assert f.values.shape == (3, 5)
    assert f.values[0, 0] == 1.0 and f.values[0, 4] == 0.0
    assert f.values[2, 0] == 1.0 and f.values[2, 1] == 0.0


def test_field_is_pure_under_evaluation_order():
    m = random_atomic_measure(np.random.default_rng(11))
    bbox, res = (-6, -6, 6, 6), (23, 17)
    f = depth_field(m, bbox, res)
    pts = grid_points(bbox, res)
    order = np.random.default_rng(0).permutation(len(pts))
    shuffled = np.empty(len(pts))
    shuffled[order] = D.depth_many(m, pts[order])
    columns = np.stack([D.depth_many(m, pts.reshape(res[1], res[0], 2)[:, j]) for j in range(res[0])],
                       axis=1)
    assert np.array_equal(f.values.ravel(), shuffled)
    assert np.array_equal(f.values, columns)


def test_field_csv_and_sidecar(tmp_path):
    f = depth_field(TRIANGLE, (-1, -1, 2, 2), (4, 3), {"spec_hash": "abc", "seed": 0})
    f.to_csv(tmp_path / "f.csv")
    back = np.loadtxt(tmp_path / "f.csv", delimiter=",")
    assert np.array_equal(back, f.values)
    side = f.sidecar()
    assert side["resolution"] == [4, 3] and side["spec_hash"] == "abc"


@pytest.mark.parametrize("bbox, res", [((0, 0, 0, 1), (3, 3)), ((0, 0, 1, 1), (1, 5))])
def test_field_rejects_bad_grids(bbox, res):
    with pytest.raises(ValueError):
        depth_field(TRIANGLE, bbox, res)


def test_field_values_within_total_mass():
    f = depth_field(cauchy_with_center_atom(), (-5, -5, 5, 5), (11, 11))
    assert isinstance(f, DepthField)
    assert np.all(np.isfinite(f.values)) and f.values.min() >= 0 and f.values.max() <= 1


# random instances ------------------------------------------------------------------------


def test_random_instances_respect_general_position():
    rng = np.random.default_rng(0)
    for _ in range(30):
        pts = list(random_atomic_measure(rng, n_max=8, general_position=True).atoms())
        for i, a in enumerate(pts):
            for j in range(i + 1, len(pts)):
                for b in pts[j + 1:]:
                    c = pts[j]
                    assert (c[0] - a[0]) * (b[1] - a[1]) != (c[1] - a[1]) * (b[0] - a[0])
