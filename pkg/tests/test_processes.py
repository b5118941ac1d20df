import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrodim.errors import InputError, ResourceError
from macrodim.estimators import ExceedanceTransformer
from macrodim.exceedance import ExceedanceSpec, GaugeSpec, exceedance_pixels, gauge_eval, model_gauge
from macrodim.rng import make_rng
from macrodim.simulators.processes import ou_sup_exceedance, pickands_tail, simulate_bm, simulate_ou
from macrodim.simulators.types import Field, TrajectoryGrid


def test_rng_streams_frozen_and_independent():
    assert make_rng(1, "bm", 0).standard_normal(2).tolist() == [-2.0586024837871038, 0.583830595748994]
    a = make_rng(1, "bm", 0).random(5)
    assert not np.allclose(a, make_rng(1, "bm", 1).random(5))
    assert not np.allclose(a, make_rng(1, "ou", 0).random(5))


def test_bm_frozen():
    b = simulate_bm(10, 0.5, seed=1)
    assert b.values[0] == 0.0
    np.testing.assert_allclose(b.values[1:4], [-1.455651776053331, -1.0428212027350354, -0.2432024017521217],
                               rtol=1e-12)
    assert b.values.size == 20


def test_ou_frozen():
    o = simulate_ou(10, 0.5, seed=1)
    np.testing.assert_allclose(o.values[:2], [-0.5296323367908714, -0.03029967075399187], rtol=1e-12)


def test_ou_stationary_covariance():
    v = simulate_ou(200_000, 0.25, seed=2).values
    assert np.var(v) == pytest.approx(1.0, abs=0.03)
    lag = 4  # h = 1
    assert np.corrcoef(v[:-lag], v[lag:])[0, 1] == pytest.approx(math.exp(-0.5), abs=0.02)


def test_bm_increment_variance():
    v = simulate_bm(100_000, 0.25, seed=3).values
    assert np.var(np.diff(v)) == pytest.approx(0.25, rel=0.02)


def test_path_budget_and_inputs():
    with pytest.raises(ResourceError):
        simulate_bm(1e12, 0.25, seed=0)
    with pytest.raises(InputError):
        simulate_ou(0.1, 0.25, seed=0)


def test_ou_sup_frozen_and_pickands_shape():
    p = ou_sup_exceedance([1.0, 2.0], 2.0 ** -6, 20_000, seed=3)
    np.testing.assert_allclose(p, [0.37225, 0.0832])
    np.testing.assert_allclose(pickands_tail([1.0, 2.0]), [0.12098536, 0.05399097], rtol=1e-7)


def test_gauges():
    assert gauge_eval(GaugeSpec("sqrt_log"), math.e ** 2) == pytest.approx(2.0)
    assert gauge_eval(GaugeSpec("log_two_thirds", 2.0), math.exp(8)) == pytest.approx(8.0)
    s = 1e6
    assert gauge_eval(GaugeSpec("bm_lil"), s) == pytest.approx(math.sqrt(2 * s * math.log(math.log(s))))
    with pytest.raises(InputError):
        gauge_eval(GaugeSpec("sqrt_log"), 1.5)
    with pytest.raises(InputError):
        GaugeSpec("bm_lil", start=3.0)
    with pytest.raises(InputError):
        GaugeSpec("cubic")


def test_model_gauges():
    g, tr = model_gauge("linear_she", math.pi)
    assert g.norm == pytest.approx(1.0) and tr == "identity"
    assert model_gauge("pam", 8.0)[0].norm == pytest.approx(2.0)
    assert model_gauge("colored", 4.0) == (GaugeSpec("sqrt_log_colored", 2.0), "log")
    with pytest.raises(InputError):
        model_gauge("kpz")


def test_exceedance_trajectory_frozen():
    vals = np.zeros(16)
    vals[[6, 9, 15]] = [5.0, 4.0, 10.0]
    px = exceedance_pixels(TrajectoryGrid(0.0, 0.5, vals), ExceedanceSpec(GaugeSpec("sqrt_log"), 1.0))
    assert px.all_cells().tolist() == [3, 4, 7]


def test_exceedance_field_symmetric():
    f = Field(1, (-10.0,), 1.0, 1.0, np.r_[np.full(10, 3.0), np.zeros(11)])
    px = exceedance_pixels(f, ExceedanceSpec(GaugeSpec("sqrt_log"), 1.0))
    assert sorted(px.all_cells().tolist()) == list(range(-10, -2))


def test_exceedance_log_and_signed():
    f = Field(1, (0.0,), 1.0, 1.0, np.array([0, 0, 0, -5.0, 0.0, 100.0]))
    spec = ExceedanceSpec(GaugeSpec("sqrt_log"), 1.0)
    assert exceedance_pixels(f, spec, "signed").all_cells().tolist() == [3, 5]
    assert exceedance_pixels(f, spec, "log").all_cells().tolist() == [5]


def test_exceedance_coarse_grid_rejected():
    with pytest.raises(InputError):
        exceedance_pixels(TrajectoryGrid(0.0, 2.0, np.zeros(5)), ExceedanceSpec(GaugeSpec("sqrt_log"), 1.0))


@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0))
@settings(max_examples=30, deadline=None)
def test_exceedance_monotone_in_gamma(g1, g2):
    lo, hi = sorted((g1, g2))
    path = simulate_ou(3000, 0.25, seed=11)
    a = exceedance_pixels(path, ExceedanceSpec(GaugeSpec("sqrt_log"), hi))
    b = exceedance_pixels(path, ExceedanceSpec(GaugeSpec("sqrt_log"), lo))
    assert a.issubset(b)


def test_transformer_accepts_arrays():
    t = np.arange(0, 8, 0.5)
    vals = np.zeros(16)
    vals[[6, 9, 15]] = [5.0, 4.0, 10.0]
    px = ExceedanceTransformer(gamma=1.0).fit().transform(np.column_stack([t, vals]))
    assert px.all_cells().tolist() == [3, 4, 7]
