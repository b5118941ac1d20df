import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrodim.errors import InputError
from macrodim.estimators import TailExponentRegressor
from macrodim.models import ModelConfig
from macrodim.moments import (MomentEstimate, UnreliableMomentWarning, feynman_kac_oracle, intermittency_check,
                              lyapunov_envelope, lyapunov_fit, moment_ensemble, tail_exponent_fit, write_moments_csv)
from macrodim.simulators.heat import GaussianBump


def _table(lams, ts, hw=0.0):
    return [MomentEstimate(k, t, math.exp(lam * t), hw * math.exp(lam * t), 10)
            for k, lam in lams.items() for t in ts]


def test_ensemble_frozen():
    tab = moment_ensemble(ModelConfig("pam"), [1, 2], [0.5, 1.0], replicas=2, seed=1, extent=2000.0)
    got = [(e.k, e.t, e.estimate) for e in tab]
    expect = [(1.0, 0.5, 0.9837473070048449), (1.0, 1.0, 0.9729481371269765),
              (2.0, 0.5, 1.5480867418110045), (2.0, 1.0, 1.8652463235368026)]
    for (k, t, v), (k2, t2, v2) in zip(got, expect):
        assert (k, t) == (k2, t2) and v == pytest.approx(v2, rel=1e-10)
    assert tab[3].half_width == pytest.approx(0.21422212671315907, rel=1e-8)


def test_ensemble_guards():
    with pytest.raises(InputError):
        moment_ensemble(ModelConfig("pam"), [7], [0.5], replicas=2, seed=1)
    with pytest.raises(InputError):
        moment_ensemble(ModelConfig("pam"), [2], [0.5], replicas=1, seed=1, extent=200.0)


def test_lyapunov_exact_on_synthetic():
    ts = np.linspace(0.2, 2.0, 10)
    fit = lyapunov_fit(_table({2: 0.3}, ts), 2)
    assert fit.slope == pytest.approx(0.3, abs=1e-12) and fit.stderr == 0.0
    with pytest.raises(InputError):
        lyapunov_fit(_table({2: 0.3}, ts[:3]), 2)


def test_lyapunov_window():
    ts = np.linspace(0.2, 5.0, 25)
    tab = [MomentEstimate(2, t, math.exp(0.5 * t if t < 1.5 else 0.75 + 0.25 * (t - 1.5)), 0.0, 4) for t in ts]
    assert lyapunov_fit(tab, 2, 2.0, 5.0).slope == pytest.approx(0.25, abs=1e-12)


def test_lyapunov_envelope_brackets_changing_rate():
    ts = np.linspace(0.2, 5.0, 25)
    tab = [MomentEstimate(2, t, math.exp(0.5 * t if t < 1.5 else 0.75 + 0.25 * (t - 1.5)), 0.0, 4) for t in ts]
    lo, hi = lyapunov_envelope(tab, 2)
    assert lo == pytest.approx(0.25, abs=1e-9) and hi == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(InputError):
        lyapunov_envelope(tab[:3], 2)


def test_intermittency_verdicts():
    ts = np.linspace(0.2, 1.0, 5)
    fits = [lyapunov_fit(_table({k: k * k / 8}, ts, 0.01), k) for k in (2, 3, 4)]
    rep = intermittency_check(fits)
    assert rep.verdict == "intermittent" and rep.intermittent
    np.testing.assert_allclose(rep.ratios, [0.25, 0.375, 0.5])
    flat = [lyapunov_fit(_table({k: k * 0.1}, ts, 0.01), k) for k in (2, 3)]
    assert intermittency_check(flat).verdict == "not_intermittent"
    with pytest.raises(InputError):
        intermittency_check(fits[:1])


def test_dominance_warning():
    ts = np.linspace(0.2, 1.0, 5)
    tab = _table({2: 0.5}, ts)
    tab[0].dominance_flag = True
    with pytest.warns(UnreliableMomentWarning):
        assert lyapunov_fit(tab, 2).unreliable


def test_fk_frozen_and_permutation_invariant():
    fk = feynman_kac_oracle(2, 0.5, GaussianBump(1, 1), 2000, 0.05, seed=2, d=2)
    assert fk.estimate == pytest.approx(3.645746448495081, rel=1e-10)
    assert fk.f0 == pytest.approx(math.pi)
    a = feynman_kac_oracle(3, 0.5, GaussianBump(1, 1), 500, 0.05, seed=2, d=1)
    b = feynman_kac_oracle(3, 0.5, GaussianBump(1, 1), 500, 0.05, seed=2, d=1, order=[2, 0, 1])
    assert a.estimate == b.estimate == pytest.approx(11.063612756536513, rel=1e-10)


@given(st.integers(2, 5), st.floats(0.1, 1.0), st.floats(0.1, 2.0))
@settings(max_examples=25, deadline=None)
def test_fk_constant_f_closed_form(k, t, c):
    est = feynman_kac_oracle(k, t, c, 50, 0.01, seed=0).estimate
    assert est == pytest.approx(math.exp(k * (k - 1) / 2 * c * t), rel=1e-12)


def test_fk_callable_matches_bump():
    bump = GaussianBump(1, 1)
    a = feynman_kac_oracle(2, 0.5, bump, 300, 0.05, seed=4).estimate
    b = feynman_kac_oracle(2, 0.5, lambda r: bump.f(r, 1), 300, 0.05, seed=4).estimate
    assert a == pytest.approx(b, rel=1e-10)


def test_tail_fit_frozen():
    g = np.random.default_rng(0).standard_normal(200_000)
    tf = tail_exponent_fit(g)
    assert tf.b_hat == pytest.approx(1.8) and tf.b_mode == "free"
    assert (tf.z_lo, tf.z_hi) == pytest.approx((1.2811860020455306, 3.945549686526577))
    fixed = tail_exponent_fit(g, b=2.0)
    assert fixed.b_hat == 2.0 and fixed.c_hat == pytest.approx(0.5138077650132763, rel=1e-8)


def test_tail_fit_exponential():
    e = np.random.default_rng(0).exponential(size=200_000)
    tf = tail_exponent_fit(e, log_term=False)
    assert tf.b_hat == pytest.approx(1.0, abs=0.05) and tf.c_hat == pytest.approx(1.0, abs=0.05)


def test_tail_fit_guards():
    with pytest.raises(InputError):
        tail_exponent_fit(np.arange(10.0))
    g = np.random.default_rng(1).standard_normal(5000)
    with pytest.warns(UserWarning, match="shrunk"):
        tail_exponent_fit(g, z_range=(1.0, 10.0))
    with pytest.raises(InputError):
        tail_exponent_fit(g, z_range=(-1.0, 2.0))


def test_tail_regressor():
    g = np.random.default_rng(0).standard_normal(200_000)
    reg = TailExponentRegressor(b=2.0).fit(g)
    z = np.array([2.0, 3.0])
    pred = reg.predict(z)
    emp = -np.log([np.mean(g > 2.0), np.mean(g > 3.0)])
    np.testing.assert_allclose(pred, emp, rtol=0.05)


def test_moments_csv(tmp_path):
    p = tmp_path / "m.csv"
    write_moments_csv(p, _table({2: 0.3}, [0.5]))
    rows = list(csv.DictReader(open(p)))
    assert rows[0]["k"] == "2" and float(rows[0]["estimate"]) == pytest.approx(math.exp(0.15))


def test_no_spurious_warnings_on_clean_table():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lyapunov_fit(_table({2: 0.3}, np.linspace(0.2, 1, 5)), 2)
