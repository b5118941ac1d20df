import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrodim.errors import InputError
from macrodim.shells import (Intervals, PixelSet, Points, Rectangles, UprightBox, build_skeleton,
                             is_theta_thick, max_shell, pixelize, shell_bounds, shell_of, shells_of_cells)


def test_shell_bounds_frozen():
    assert shell_bounds(0) == (-1, 1)
    assert shell_bounds(3) == (-20, 21)
    assert max_shell() == 42


@pytest.mark.parametrize("x, n", [(0.0, 0), (0.99, 0), (-1.0, 0), (-1.5, 1), (1.0, 1), (12.0, 3),
                                  ((5.0, 60.0), 5), (-math.exp(2), 2)])
def test_shell_of(x, n):
    assert shell_of(x) == n


def test_shells_of_cells_frozen():
    z = np.array([0, 1, 2, 3, 7, -1, -2, -3, -8])
    assert shells_of_cells(z).tolist() == [0, 1, 1, 2, 2, 0, 1, 2, 3]


@given(st.integers(-10**12, 10**12))
def test_cells_agree_with_points(z):
    assert shells_of_cells(np.array([z]))[0] == shell_of(float(z))


def test_shell_of_rejects_nan():
    with pytest.raises(InputError):
        shell_of(float("nan"))


def test_pixelize_intervals_split_by_shell():
    px = pixelize(Intervals(np.array([2.5, 30.0]), np.array([4.2, 33.1])))
    assert px.shells() == [1, 2, 4]
    assert [px.runs(n).tolist() for n in px.shells()] == [[[2, 3]], [[3, 5]], [[30, 34]]]
    assert px.total() == 7


def test_pixelize_rectangle_and_box():
    px = pixelize(Rectangles(np.array([[0.0, 0.0]]), np.array([[1.5, 2.5]])))
    assert px.total() == 6 and px.shells() == [0, 1]
    box = pixelize(UprightBox((2.0,), 3.0))
    assert box.all_cells().tolist() == [2, 3, 4]


def test_pixelize_points_resolution():
    px = pixelize(Points(np.array([0.26, 0.74, 10.0])), resolution=0.5)
    assert px.all_cells().tolist() == [0, 1, 20]


def test_pixelize_mixed_dimension_rejected():
    with pytest.raises(InputError):
        pixelize([Intervals(np.array([0.0]), np.array([1.0])), UprightBox((0.0, 0.0), 1.0)])


def test_from_cells_merges_runs_and_dedups():
    px = PixelSet.from_cells([3, 5, 6, 6, 7, 9, 30])
    assert px.total() == 6
    assert px.runs(2).tolist() == [[3, 4], [5, 8]]
    assert px.runs(3).tolist() == [[9, 10]]


def test_union_subset_equality():
    a = PixelSet.from_cells([3, 4, 50])
    b = PixelSet.from_cells([4, 100])
    u = a.union(b)
    assert a.issubset(u) and b.issubset(u) and not u.issubset(a)
    assert u == PixelSet.from_cells([3, 4, 50, 100])


def test_csv_roundtrip():
    px = PixelSet.from_cells([[1, 2], [30, -4], [0, 0]], 2)
    buf = io.StringIO()
    px.to_csv(buf)
    buf.seek(0)
    assert PixelSet.from_csv(buf) == px


def test_window_counts():
    px = PixelSet.from_cells(np.arange(0, 100))
    assert px.count_in_window(10, 20) == 11  # closed window, corners 10..20
    assert px.measure_in_window(10, 20) == pytest.approx(10.0)


@given(st.lists(st.integers(-5000, 5000), min_size=1, max_size=60))
@settings(max_examples=60)
def test_from_cells_roundtrip(cells):
    px = PixelSet.from_cells(cells)
    assert sorted(px.all_cells().tolist()) == sorted(set(cells))
    assert sum(px.count(n) for n in px.shells()) == len(set(cells))


def test_skeleton_frozen():
    sk = build_skeleton(0.5, 10)
    assert sk.start_shell == 0
    assert sk.a == pytest.approx(0.5819767068693265)
    assert sk.count(5) == 20 and sk.count(10) == 255
    p = sk.level(5)
    assert p.start == pytest.approx(math.exp(5)) and p.step == pytest.approx(math.exp(2.5))


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_skeleton_cardinality_bounds(theta):
    sk = build_skeleton(theta, 14)
    for n in range(sk.start_shell, 15):
        target = math.exp(n * (1 - theta))
        assert sk.a * target <= sk.count(n) <= target / sk.a
        assert all(shell_of(x) == n + 1 for x in sk.points(n))


def test_thickness():
    sk = build_skeleton(0.5, 8)
    assert is_theta_thick(PixelSet.from_cells(np.arange(0, 3000)), sk, (2, 7))
    res = is_theta_thick(PixelSet.from_cells([1]), sk, (2, 3))
    assert not res and res.witness[0] == 2
