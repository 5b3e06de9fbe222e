import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mscgarch.errors import DataError
from mscgarch.filtering import (
    filter_init,
    filter_step,
    forecast_one_step,
    forward_pass,
    log_normal_density,
    run_filter,
)
from mscgarch.markov import stationary_distribution
from mscgarch.model import ModelSpec, benchmark_dgp, simulate

from test_model import random_spec


def naive_variances(par, y, H0):
    """Per-regime variance paths written out longhand."""
    T, K = len(y), len(par)
    H = np.empty((T, K))
    for j, (a0, a1, a2, b0, b1, b2, g) in enumerate(par):
        h, yp = H0, 0.0
        for t in range(T):
            w = (1 - math.exp(-g * abs(yp))) / (1 + math.exp(-g * abs(yp)))
            h = w * (a0 + a1 * yp**2 + a2 * h) + (1 - w) * (b0 + b1 * yp**2 + b2 * h)
            H[t, j] = h
            yp = y[t]
    return H


def enumerate_loglik(spec, y, H0):
    """Likelihood summed over every regime path."""
    P = spec.transition.p
    pi = stationary_distribution(P)
    H = naive_variances(spec.param_matrix(), y, H0)
    dens = np.exp(-0.5 * y[:, None] ** 2 / H) / np.sqrt(2 * math.pi * H)
    total = 0.0
    for path in itertools.product(range(spec.K), repeat=len(y)):
        p = pi[path[0]] * dens[0, path[0]]
        for t in range(1, len(y)):
            p *= P[path[t - 1], path[t]] * dens[t, path[t]]
        total += p
    return math.log(total)


P_EX = np.array([[0.85, 0.15], [0.05, 0.95]])


def test_stationary_example():
    assert_allclose(stationary_distribution(P_EX), [0.25, 0.75], atol=1e-14)


def test_init_uses_stationary_distribution():
    st0 = filter_init(benchmark_dgp(), 1.0)
    assert_allclose(st0.alpha_pred, [0.25, 0.75], atol=1e-14)
    assert st0.loglik == 0.0
    # first variances come from y_0 = 0
    assert_allclose(st0.H, [0.7 + 0.2, 0.2 + 0.2], rtol=1e-14)


def test_equal_densities_propagate_through_transition():
    r = benchmark_dgp().regimes[0]
    spec = ModelSpec((r, r), benchmark_dgp().transition)
    s = filter_init(spec, 1.0)
    s = type(s)(s.t, np.array([0.5, 0.5]), s.alpha_filt, s.H, s.h1, s.h2, s.w, 0.0)
    nxt = filter_step(s, spec, 0.7)
    assert_allclose(nxt.alpha_filt, [0.5, 0.5], atol=1e-15)
    assert_allclose(nxt.alpha_pred, [0.45, 0.55], atol=1e-14)


def test_forecast_weighted_average():
    s = filter_init(benchmark_dgp(), 1.0)
    s = type(s)(s.t, np.array([0.45, 0.55]), s.alpha_filt, np.array([2.0, 0.5]), s.h1, s.h2, s.w, 0.0)
    assert_allclose(forecast_one_step(s, benchmark_dgp()).var_forecast, 1.175, rtol=1e-15)
    s = type(s)(s.t, np.array([1.0, 0.0]), s.alpha_filt, s.H, s.h1, s.h2, s.w, 0.0)
    assert forecast_one_step(s, benchmark_dgp()).var_forecast == 2.0


def test_single_regime():
    spec = ModelSpec.from_arrays([[0.4, 0.1, 0.5, 0.2, 0.05, 0.6, 1.5]], [[1.0]])
    y = np.random.default_rng(0).standard_normal(30)
    res = run_filter(spec, y, 1.0)
    H = naive_variances(spec.param_matrix(), y, 1.0)[:, 0]
    assert_allclose(res.var_forecast, H, rtol=1e-13)
    assert np.all(res.alpha_pred == 1.0)
    ll = sum(-0.5 * (math.log(2 * math.pi * h) + v * v / h) for v, h in zip(y, H))
    assert_allclose(res.loglik, ll, rtol=1e-12)


def test_matches_brute_force_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        spec = random_spec(rng)
        y = rng.standard_normal(10) * rng.uniform(0.3, 3)
        res = run_filter(spec, y, 1.1)
        assert_allclose(res.loglik, enumerate_loglik(spec, y, 1.1), rtol=1e-10)


def test_three_regimes_brute_force():
    rng = np.random.default_rng(3)
    spec = random_spec(rng, K=3)
    y = rng.standard_normal(6)
    assert_allclose(run_filter(spec, y, 0.9).loglik, enumerate_loglik(spec, y, 0.9), rtol=1e-10)


def test_forward_pass_agrees_with_filter():
    spec = benchmark_dgp()
    y = simulate(spec, 200, 1).y
    res = run_filter(spec, y, 1.0)
    ld = log_normal_density(y[:, None], res.H)
    filt, ll = forward_pass(ld, spec.transition.p, spec.transition.stationary)
    assert_allclose(ll, res.loglik, rtol=1e-12)
    assert_allclose(filt, np.array([s.alpha_filt for s in res.states]), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_probabilities_stay_normalized(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng)
    y = rng.standard_normal(50) * 2
    res = run_filter(spec, y)
    for s in res.states:
        assert abs(s.alpha_pred.sum() - 1) <= 1e-12
        assert abs(s.alpha_filt.sum() - 1) <= 1e-12
        assert np.all((s.alpha_pred >= 0) & (s.alpha_pred <= 1))
    for f in res.forecasts:
        assert abs(f.var_forecast - f.alpha @ f.per_regime[:, 0]) <= 1e-12 * f.var_forecast


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 39))
def test_no_look_ahead(seed, cut):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng)
    y = rng.standard_normal(40)
    y2 = y.copy()
    y2[cut:] = rng.standard_normal(40 - cut) * 10
    a = run_filter(spec, y, 1.0).var_forecast
    b = run_filter(spec, y2, 1.0).var_forecast
    assert np.array_equal(a[: cut + 1], b[: cut + 1])


def test_relabeling_invariance():
    rng = np.random.default_rng(8)
    spec = random_spec(rng, K=3)
    y = rng.standard_normal(80)
    a = run_filter(spec, y, 1.0)
    perm = [1, 2, 0]
    b = run_filter(spec.relabel(perm), y, 1.0)
    assert_allclose(a.loglik, b.loglik, rtol=1e-12)
    assert_allclose(a.var_forecast, b.var_forecast, rtol=1e-12)
    assert_allclose(a.alpha_pred[:, perm], b.alpha_pred, atol=1e-12)


def test_extreme_values_stay_finite():
    spec = ModelSpec.from_arrays(
        [[1e-8, 0.0, 0.0, 1e-8, 0.0, 0.0, 1.0], [5.0, 0.3, 0.5, 2.0, 0.1, 0.5, 0.5]],
        [[0.9, 0.1], [0.2, 0.8]],
    )
    y = np.array([0.0, 1e-5, 1e3, -1e3, 5.0, 1e-4, 0.0, 700.0, -2.0, 1e3])
    res = run_filter(spec, y, 1e-8)
    assert math.isfinite(res.loglik)
    assert all(np.all(np.isfinite(s.alpha_filt)) for s in res.states)
    assert np.all(np.isfinite(res.var_forecast))


def test_rejects_bad_input():
    with pytest.raises(DataError, match="index 2"):
        run_filter(benchmark_dgp(), [0.1, 0.2, math.nan])
    with pytest.raises(DataError):
        run_filter(benchmark_dgp(), [])
    with pytest.raises(DataError):
        filter_init(benchmark_dgp(), 0.0)


def test_default_h_init_is_sample_variance():
    y = simulate(benchmark_dgp(), 100, 4).y
    assert_allclose(run_filter(benchmark_dgp(), y).loglik, run_filter(benchmark_dgp(), y, float(np.var(y))).loglik)


def test_result_unpacks():
    states, forecasts, ll = run_filter(benchmark_dgp(), [0.1, -0.3, 0.2])
    assert len(states) == len(forecasts) == 3
    assert forecasts[0].t == 1 and states[-1].t == 3
    assert ll == states[-1].loglik
