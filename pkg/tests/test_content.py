import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrodim.content import brute_force_content, covers_all, run_content, shell_content
from macrodim.errors import InputError
from macrodim.shells import PixelSet

SHELL4 = st.lists(st.integers(21, 54), min_size=1, max_size=12, unique=True)


def test_two_cells_frozen():
    px = PixelSet.from_cells([100, 103])
    assert shell_content(px, 5, 1.0).cost == pytest.approx(0.013475893998170934, rel=1e-12)
    assert shell_content(px, 5, 0.5).cost == pytest.approx(0.1641699972477976, rel=1e-12)


def test_d2_quadtree_frozen():
    px = PixelSet.from_cells([[20, 20], [21, 21], [30, 5]], 2)
    sol = shell_content(px, 4, 0.7)
    assert sol.cost == pytest.approx(0.12162012525043595, rel=1e-12)
    assert not sol.exact and covers_all(sol, px)


def test_rho_one_is_cell_count():
    # unit boxes are optimal for rho >= 1
    px = PixelSet.from_cells(np.arange(100, 140))
    assert shell_content(px, 5, 1.0).cost == pytest.approx(40 * math.exp(-5))


def test_single_run_small_rho_uses_one_box():
    runs = np.array([[0, 10], [12, 20]])
    tot, corners, sides, rep, exact = run_content(runs, 0.3)
    assert exact and sides.tolist() == [20.0] and tot == pytest.approx(20 ** 0.3)


def test_empty_shell():
    sol = shell_content(PixelSet.from_cells([100]), 3, 0.5)
    assert sol.cost == 0.0 and sol.n_boxes == 0


def test_rejects_bad_input():
    px = PixelSet.from_cells([100])
    with pytest.raises(InputError):
        shell_content(px, 5, -1.0)
    with pytest.raises(InputError):
        shell_content(px, 5, 0.5, min_side=0.5)


@given(SHELL4, st.floats(0.05, 1.5))
@settings(max_examples=150, deadline=None)
def test_dp_matches_brute_force(cells, rho):
    px = PixelSet.from_cells(cells)
    sol = shell_content(px, 4, rho)
    assert sol.exact
    assert sol.cost == pytest.approx(brute_force_content(cells, 4, rho), rel=1e-10)
    assert covers_all(sol, px)
    assert sol.recomputed_cost() == pytest.approx(sol.cost, rel=1e-10)


@given(SHELL4, st.floats(0.05, 0.95))
@settings(max_examples=60, deadline=None)
def test_min_side_two_is_valid_upper_bound(cells, rho):
    px = PixelSet.from_cells(cells)
    sol = shell_content(px, 4, rho, min_side=2.0)
    assert sol.cost >= brute_force_content(cells, 4, rho, min_side=2.0) * (1 - 1e-10)
    assert covers_all(sol, px)


@given(SHELL4, SHELL4, st.floats(0.05, 1.0))
@settings(max_examples=60, deadline=None)
def test_monotone_under_inclusion(a, b, rho):
    small = PixelSet.from_cells(a)
    big = PixelSet.from_cells(a + b)
    assert shell_content(small, 4, rho).cost <= shell_content(big, 4, rho).cost * (1 + 1e-12)


def test_quadratic_and_concave_agree():
    rng = np.random.default_rng(1)
    cells = np.unique(rng.integers(1100, 2980, 300))
    runs = PixelSet.from_cells(cells).runs(8)
    for rho in (0.2, 0.5, 0.8):
        a = run_content(runs, rho, method="concave")[0]
        b = run_content(runs, rho, method="quadratic")[0]
        assert a == pytest.approx(b, rel=1e-12)
