import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from mscgarch.errors import DataError
from mscgarch.evaluation import compare_models, forecast_errors
from mscgarch.filtering import run_filter
from mscgarch.model import benchmark_dgp, ms_garch_spec, simulate


def test_perfect_forecast():
    y = np.array([0.5, -1.0, 2.0])
    r = forecast_errors(y**2, y)
    assert r.rmse == 0.0 and r.mae == 0.0 and r.n == 3


def test_hand_example():
    r = forecast_errors([1.0, 3.0], [1.0, 1.0], "m")
    assert_allclose(r.rmse, math.sqrt(2), rtol=1e-15)
    assert r.mae == 1.0
    assert_allclose(r.per_t_abs_error, [0.0, 2.0])
    assert r.to_dict() == {"model": "m", "rmse": r.rmse, "mae": 1.0, "n": 2}


@given(
    arrays(np.float64, st.integers(1, 60), elements=st.floats(0, 50)),
    st.integers(0, 2**31 - 1),
)
def test_mae_never_exceeds_rmse(f, seed):
    y = np.random.default_rng(seed).standard_normal(f.size) * 3
    r = forecast_errors(f, y)
    assert 0 <= r.mae <= r.rmse * (1 + 1e-12) + 1e-300


def test_length_mismatch():
    with pytest.raises(DataError):
        forecast_errors([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        forecast_errors([], [])


def test_compare_models_uses_filter_forecasts():
    spec = benchmark_dgp()
    y = simulate(spec, 200, 5).y
    cmp = compare_models(y, spec, ms_garch_spec(spec))
    f = run_filter(spec, y).var_forecast
    assert_allclose(cmp.forecasts[0], f)
    assert_allclose(cmp.cgarch.rmse, math.sqrt(np.mean((f - y**2) ** 2)), rtol=1e-12)
    assert cmp.winner["rmse"] in ("MS-CGARCH", "MS-GARCH")
    table = cmp.table()
    assert table[0] == ["metric", "MS-GARCH", "MS-CGARCH"]
    assert [row[0] for row in table[1:]] == ["RMSE", "MAE"]


def test_compare_identical_specs_tie():
    spec = ms_garch_spec(benchmark_dgp())
    y = simulate(spec, 100, 2).y
    cmp = compare_models(y, spec, spec)
    assert cmp.cgarch.rmse == cmp.garch.rmse


def test_holdout_start():
    spec = benchmark_dgp()
    y = simulate(spec, 150, 3).y
    cmp = compare_models(y, spec, ms_garch_spec(spec), start=100)
    assert cmp.cgarch.n == 50
    f = run_filter(spec, y, float(np.var(y[:100]))).var_forecast
    assert_allclose(cmp.forecasts[0], f)
    with pytest.raises(DataError):
        compare_models(y, spec, spec, start=150)
