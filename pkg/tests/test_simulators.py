import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from macrodim.errors import InputError, StabilityError
from macrodim.models import ModelConfig, default_extent, simulate
from macrodim.simulators.heat import (GaussianBump, NoiseSpec, SchemeSpec, SigmaSpec, discrete_f0,
                                      pam_second_moment_exact, solve_pam_colored, solve_she_1d)
from macrodim.simulators.linear_she import (sample_linear_she, sample_linear_she_windowed, she_covariance,
                                            spectral_density)

PAM = SchemeSpec("exp_multiplicative", 0.03125, 0.25, SigmaSpec("linear"))


# -- linear SHE ---------------------------------------------------------
def test_covariance_frozen():
    np.testing.assert_allclose(she_covariance(np.array([0.0, 1.0, 3.0]), 1.0),
                               [0.5641895835477563, 0.19964122837424564, 0.00862286432478078], rtol=1e-12)
    assert she_covariance(np.array([0.0]), math.pi)[0] == pytest.approx(1.0)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_spectral_density_is_fourier_pair(t):
    # c_t(x) = int S(xi) e^{i x xi} dxi
    def S(xi):
        return spectral_density(np.array([xi]), t)[0]

    at0 = 2 * (integrate.quad(S, 0, 50)[0] + integrate.quad(S, 50, np.inf)[0])
    assert at0 == pytest.approx(she_covariance(np.array([0.0]), t)[0], rel=1e-7)
    at_x = 2 * integrate.quad(S, 0, np.inf, weight="cos", wvar=0.7)[0]
    assert at_x == pytest.approx(she_covariance(np.array([0.7]), t)[0], rel=1e-7)


def test_linear_she_frozen():
    f = sample_linear_she(1.0, 50.0, 0.5, seed=2)
    np.testing.assert_allclose(f.values[:3], [0.5678784852750414, 0.4334638726637514, 1.1204341883330304],
                               rtol=1e-10)
    assert f.values.size == 100 and f.meta["circulant_size"] == 128


def test_linear_she_variance():
    v = np.mean([np.mean(sample_linear_she(1.0, 2000.0, 0.25, seed=9, replica=r).values ** 2) for r in range(8)])
    assert v == pytest.approx(1 / math.sqrt(math.pi), rel=0.03)


def test_windowed_frozen():
    w = sample_linear_she_windowed(1.0, [0.0], 4.0, 0.05, 0.1, seed=1, replicas=3)
    np.testing.assert_allclose(w.z[:, 0], [1.2124738657216485, 0.84725516282595, 1.0134790017182516], rtol=1e-10)
    np.testing.assert_allclose(w.zb[:, 0], [1.2091732051461888, 0.8576760413749189, 1.0149911173163562],
                               rtol=1e-10)
    assert w.var_full[0] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-6)
    assert w.var_gap[0] == pytest.approx(0.00023312, rel=1e-4)


@pytest.mark.parametrize("B", [4.0, 8.0, 12.0])
def test_windowed_gap_below_bound(B):
    w = sample_linear_she_windowed(1.0, [0.0], B, 0.05, 0.1, seed=1, replicas=2)
    assert w.var_gap[0] <= math.sqrt(8 / math.pi) * math.exp(-B / 2)


def test_windowed_rejects_bad_steps():
    with pytest.raises(InputError):
        sample_linear_she_windowed(1.0, [0.0], 4.0, 0.3, 0.1, seed=1)
    with pytest.raises(InputError):
        sample_linear_she_windowed(1.0, [0.0], 100.0, 0.05, 0.1, seed=1)


# -- nonlinearities and specs ----------------------------------------------
def test_sigma_kinds():
    s = SigmaSpec("clipped_linear", ell=0.8, L=1.2)
    np.testing.assert_allclose(s(np.array([-2.0, 0.5, 1.0, 3.0])), [-2.4, 0.4, 1.0, 3.6])
    assert s.bounds() == (0.8, 1.2)
    tab = SigmaSpec("table", u_nodes=(0.0, 1.0, 2.0), s_nodes=(0.0, 2.0, 3.0))
    np.testing.assert_allclose(tab(np.array([0.5, 1.5, 5.0])), [1.0, 2.5, 6.0])
    assert tab.bounds() == (1.0, 2.0)


@given(st.floats(-50, 50, allow_nan=False))
def test_clipped_sigma_ratio_in_band(u):
    s = SigmaSpec("clipped_linear", ell=0.8, L=1.2)
    v = float(s(np.array([u]))[0])
    assert 0.8 * abs(u) - 1e-12 <= abs(v) <= 1.2 * abs(u) + 1e-12


def test_stability_guard():
    with pytest.raises(StabilityError, match="0.03125"):
        SchemeSpec("explicit_euler", 0.1, 0.25).check_stability(1)
    with pytest.raises(StabilityError):
        ModelConfig("colored", d=2, dt=0.03125)


def test_bump():
    b = GaussianBump.parse("gaussian:A=2,w=0.5")
    assert (b.amplitude, b.width, b.truncation) == (2.0, 0.5, 6.0)
    assert GaussianBump(1, 1).f0(2) == pytest.approx(math.pi)
    assert GaussianBump(1, 1).f0(1) == pytest.approx(math.sqrt(math.pi))
    assert discrete_f0(GaussianBump(1, 1), 2, 0.25) == pytest.approx(math.pi, rel=1e-12)
    with pytest.raises(InputError):
        GaussianBump.parse("box:A=1")


# -- heat solvers ---------------------------------------------------------
def test_pam_exact_second_moment_frozen():
    t, m = pam_second_moment_exact(0.03125, 0.25, 1.0)
    assert t[-1] == 1.0 and len(t) == 32
    assert m[-1] == pytest.approx(2.0011021897134, rel=1e-12)
    assert np.all(np.diff(m) > 0)


def test_pam_solver_frozen():
    r = solve_she_1d(PAM, NoiseSpec("white"), 0.5, 20.0, seed=4)
    np.testing.assert_allclose(r[0].values[:3], [0.9644583762333088, 0.7970248003121873, 1.334203570901001],
                               rtol=1e-10)
    assert r[0].meta["steps"] == 16 and r[0].meta["min_value"] > 0


def test_pam_moments_match_exact():
    vals = np.concatenate([solve_she_1d(PAM, NoiseSpec("white"), 1.0, 2000.0, seed=8, replica=k)[0].values
                           for k in range(4)])
    _, m = pam_second_moment_exact(0.03125, 0.25, 1.0)
    assert vals.mean() == pytest.approx(1.0, abs=0.02)
    assert np.mean(vals ** 2) == pytest.approx(m[-1], rel=0.05)


def test_euler_clipped_frozen():
    scheme = SchemeSpec("explicit_euler", 0.03125, 0.25, SigmaSpec("clipped_linear", ell=0.8, L=1.2))
    r = solve_she_1d(scheme, NoiseSpec("white"), 0.5, 20.0, seed=4)
    np.testing.assert_allclose(r[0].values[:3], [0.547904759390134, 0.5091327680733424, 0.8943516760498935],
                               rtol=1e-10)
    assert r[0].meta["negative_fraction"] == pytest.approx(0.0375)


def test_deterministic_without_noise_window():
    # noise switched off everywhere: u stays 1
    r = solve_she_1d(PAM, NoiseSpec("white"), 0.5, 20.0, seed=4, window=(100.0, 200.0))
    np.testing.assert_allclose(r[0].values, 1.0)


def test_colored_frozen():
    c = solve_pam_colored(2, NoiseSpec("colored", GaussianBump(1, 1)), 0.015625, 0.25, 0.25, 16.0, seed=5)
    np.testing.assert_allclose(c[0].values[0, :3], [0.6016670837552816, 0.6653169048558859, 0.7469696853637179],
                               rtol=1e-10)
    assert c[0].values.shape == (64, 64) and c[0].meta["f0"] == pytest.approx(math.pi)
    with pytest.raises(InputError, match="kernel support"):
        solve_pam_colored(2, NoiseSpec("colored", GaussianBump(1, 1)), 0.015625, 0.25, 0.25, 8.0, seed=5)


def test_colored_mean_is_one():
    noise = NoiseSpec("colored", GaussianBump(1, 1))
    means = [solve_pam_colored(1, noise, 0.03125, 0.25, 0.5, 4000.0, seed=6, replica=r)[0].values.mean()
             for r in range(6)]
    # about 2000 independent unit cells per replica and Var u ~ e^{sqrt(pi)/2} - 1
    assert np.mean(means) == pytest.approx(1.0, abs=0.04)


def test_times_snapshots():
    out = solve_she_1d(PAM, NoiseSpec("white"), 1.0, 20.0, seed=4, times=[0.25, 0.5, 1.0])
    assert [f.t for f in out] == [0.25, 0.5, 1.0]
    again = solve_she_1d(PAM, NoiseSpec("white"), 1.0, 20.0, seed=4)
    np.testing.assert_array_equal(out[-1].values, again[0].values)


# -- model registry -------------------------------------------------------
def test_model_config_defaults_and_roundtrip():
    cfg = ModelConfig("pam")
    assert cfg.dt == 0.03125 and ModelConfig("ou").dt == 0.25
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    she = ModelConfig("she", sigma=SigmaSpec("clipped_linear", ell=0.8, L=1.2))
    assert ModelConfig.from_dict(she.to_dict()) == she
    with pytest.raises(InputError):
        ModelConfig("kpz")
    with pytest.raises(InputError):
        ModelConfig("pam", sigma=SigmaSpec("clipped_linear", ell=0.8, L=1.2))


def test_default_extent_frozen():
    assert default_extent(ModelConfig("ou"), 15) == pytest.approx(math.exp(15))
    assert default_extent(ModelConfig("pam"), 13) == pytest.approx(math.exp(13))


def test_simulate_dispatch():
    path = simulate(ModelConfig("ou"), 100.0, seed=1)[0]
    assert path.step == 0.25
    assert path.values[0] == pytest.approx(-0.5296323367908714)
