"""Forward filtering, one-step variance forecasts and the exact likelihood.

Because each regime's variance path is a deterministic function of past
observations, the regime probabilities follow the ordinary hidden Markov
forward recursion and the likelihood is exact in O(T K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .model import ModelSpec, regime_variance_step

__all__ = [
    "FilterState",
    "ForecastRecord",
    "FilterResult",
    "filter_init",
    "filter_step",
    "forecast_one_step",
    "run_filter",
    "log_normal_density",
    "forward_pass",
]

LOG_2PI = math.log(2.0 * math.pi)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FilterState:
    """Filter snapshot after ``t`` observations.

    ``alpha_pred`` is P(Z_{t+1} = j | y_1..y_t), ``alpha_filt`` is
    P(Z_t = j | y_1..y_t), and ``H``, ``h1``, ``h2``, ``w`` describe the
    per-regime variances for observation ``t + 1``.
    """

    t: int
    alpha_pred: np.ndarray
    alpha_filt: np.ndarray
    H: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    w: np.ndarray
    loglik: float


@dataclass(frozen=True, eq=False)
class ForecastRecord:
    t: int
    var_forecast: float
    per_regime: np.ndarray  # K x 4: H, h1, h2, w
    alpha: np.ndarray


@dataclass(frozen=True, eq=False)
class FilterResult:
    states: list
    forecasts: list
    loglik: float

    def __iter__(self):
        return iter((self.states, self.forecasts, self.loglik))

    @property
    def var_forecast(self) -> np.ndarray:
        return np.array([f.var_forecast for f in self.forecasts])

    @property
    def alpha_pred(self) -> np.ndarray:
        return np.array([f.alpha for f in self.forecasts])

    @property
    def H(self) -> np.ndarray:
        return np.array([f.per_regime[:, 0] for f in self.forecasts])


def _advance(spec: ModelSpec, y_prev: float, H_prev):
    out = np.array([regime_variance_step(r, y_prev, h) for r, h in zip(spec.regimes, H_prev)])
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def filter_init(spec: ModelSpec, H_init: float) -> FilterState:
    """Start from the stationary regime distribution and ``H_0 = H_init``.

    The first recursion step uses ``y_0 = 0``.
    """
    if not (H_init > 0 and math.isfinite(H_init)):
        raise DataError("H_init must be positive and finite")
    pi = spec.transition.stationary
    H, h1, h2, w = _advance(spec, 0.0, [float(H_init)] * spec.K)
    return FilterState(0, _frozen(pi), _frozen(pi), _frozen(H), _frozen(h1), _frozen(h2), _frozen(w), 0.0)


def log_normal_density(y, H):
    """Log density of N(0, H) at ``y``; broadcasts."""
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    return -0.5 * (LOG_2PI + np.log(H) + y * y / H)


def filter_step(state: FilterState, spec: ModelSpec, y_t: float) -> FilterState:
    y_t = float(y_t)
    if not math.isfinite(y_t):
        raise DataError("observation must be finite")
    with np.errstate(divide="ignore"):
        la = np.log(state.alpha_pred) + log_normal_density(y_t, state.H)
    m = la.max()
    if not math.isfinite(m):
        raise NumericalError("mixture density is zero for every regime", state.t + 1)
    e = np.exp(la - m)
    s = e.sum()
    filt = e / s
    pred = filt @ spec.transition.p
    pred /= pred.sum()
    H, h1, h2, w = _advance(spec, y_t, state.H)
    return FilterState(
        state.t + 1,
        _frozen(pred),
        _frozen(filt),
        _frozen(H),
        _frozen(h1),
        _frozen(h2),
        _frozen(w),
        state.loglik + m + math.log(s),
    )


def forecast_one_step(state: FilterState, spec: ModelSpec) -> ForecastRecord:
    """Variance forecast for observation ``state.t + 1``: sum_j alpha_j H_j."""
    per_regime = np.column_stack([state.H, state.h1, state.h2, state.w])
    return ForecastRecord(
        state.t + 1, float(state.alpha_pred @ state.H), _frozen(per_regime), state.alpha_pred
    )


def run_filter(spec: ModelSpec, y, H_init: float | None = None) -> FilterResult:
    """Filter a whole series.

    ``forecasts[i]`` is the forecast for ``y[i]`` built from ``y[:i]`` and
    ``states[i]`` is the state after absorbing ``y[i]``. ``H_init`` defaults
    to the sample variance of ``y``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise DataError("series must be one-dimensional and non-empty")
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise DataError(f"non-finite observation at index {bad}")
    if H_init is None:
        H_init = default_h_init(y)
    state = filter_init(spec, H_init)
    states, forecasts = [], []
    for i, yt in enumerate(y):
        forecasts.append(forecast_one_step(state, spec))
        try:
            state = filter_step(state, spec, yt)
        except NumericalError as exc:
            raise NumericalError(f"filter failed: {exc}", i) from exc
        states.append(state)
    return FilterResult(states, forecasts, state.loglik)


def default_h_init(y) -> float:
    v = float(np.var(y))
    return v if v > 0 else 1.0


def forward_pass(log_dens: np.ndarray, P: np.ndarray, pi0: np.ndarray):
    """Vectorized forward recursion on precomputed per-regime log densities.

    Parameters
    ----------
    log_dens : ndarray, shape (T, K)
        ``log f(y_t | Z_t = j, y_1..y_{t-1})``.
    P : ndarray, shape (K, K)
    pi0 : ndarray, shape (K,)
        Predictive distribution of ``Z_1``.

    Returns
    -------
    filtered : ndarray, shape (T, K)
    loglik : float
    """
    T, K = log_dens.shape
    filtered = np.empty((T, K))
    pred = np.asarray(pi0, dtype=float)
    loglik = 0.0
    shift = log_dens.max(axis=1)
    if not np.all(np.isfinite(shift)):
        raise NumericalError("regime densities are all zero", int(np.flatnonzero(~np.isfinite(shift))[0]))
    dens = np.exp(log_dens - shift[:, None])
    for t in range(T):
        e = pred * dens[t]
        s = e.sum()
        if not s > 0:
            raise NumericalError("mixture density is zero", t)
        f = e / s
        filtered[t] = f
        loglik += math.log(s)
        pred = f @ P
    return filtered, loglik + float(shift.sum())
