"""Markov switching component GARCH model: types, variance recursion, simulation.

In regime ``j`` the conditional variance is a time-varying convex combination
of two GARCH(1,1) components::

    h1[t, j] = a0 + a1 * y[t-1]**2 + a2 * H[t-1, j]
    h2[t, j] = b0 + b1 * y[t-1]**2 + b2 * H[t-1, j]
    w[t, j]  = (1 - exp(-gamma * |y[t-1]|)) / (1 + exp(-gamma * |y[t-1]|))
    H[t, j]  = w * h1 + (1 - w) * h2

and ``y[t] = eps[t] * sqrt(H[t, Z[t]])`` with ``Z`` a hidden Markov chain.
Every regime's recursion runs on its own lagged variance, so ``H`` does not
depend on the realized regime path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSpecError
from .markov import stationary_distribution
from .rng import simulation_rng

__all__ = [
    "PARAM_NAMES",
    "RegimeParams",
    "TransitionMatrix",
    "ModelSpec",
    "SimulationOutput",
    "weight",
    "regime_variance_step",
    "variance_paths",
    "simulate",
    "ms_garch_spec",
    "benchmark_dgp",
]

PARAM_NAMES = ("a0", "a1", "a2", "b0", "b1", "b2", "gamma")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegimeParams:
    a0: float
    a1: float
    a2: float
    b0: float
    b1: float
    b2: float
    gamma: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidSpecError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.a0 <= 0 or self.b0 <= 0:
            raise InvalidSpecError("intercepts a0 and b0 must be strictly positive")
        for name in ("a1", "a2", "b1", "b2"):
            if getattr(self, name) < 0:
                raise InvalidSpecError(f"{name} must be nonnegative")
        if self.gamma <= 0:
            raise InvalidSpecError("gamma must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "RegimeParams":
        return cls(*map(float, values))

    def replace(self, **changes) -> "RegimeParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix ``p[i, j] = P(Z_t = j | Z_{t-1} = i)``."""

    p: np.ndarray

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(self.p, other.p)

    __hash__ = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise InvalidSpecError("transition matrix must be a non-empty square matrix")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise InvalidSpecError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise InvalidSpecError("transition matrix rows must sum to 1")
        # raises for reducible or periodic chains
        pi = stationary_distribution(p)
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "_pi", _frozen(pi))

    @property
    def K(self) -> int:
        return self.p.shape[0]

    @property
    def stationary(self) -> np.ndarray:
        return self._pi


@dataclass(frozen=True)
class ModelSpec:
    regimes: tuple[RegimeParams, ...]
    transition: TransitionMatrix

    def __post_init__(self):
        regimes = tuple(self.regimes)
        transition = self.transition
        if not isinstance(transition, TransitionMatrix):
            transition = TransitionMatrix(np.asarray(transition, dtype=float))
        if len(regimes) != transition.K:
            raise InvalidSpecError(
                f"{len(regimes)} regimes but a {transition.K}-state transition matrix"
            )
        object.__setattr__(self, "regimes", regimes)
        object.__setattr__(self, "transition", transition)

    @property
    def K(self) -> int:
        return len(self.regimes)

    def param_matrix(self) -> np.ndarray:
        """K x 7 array with columns ordered as ``PARAM_NAMES``."""
        return np.array([r.as_array() for r in self.regimes])

    @classmethod
    def from_arrays(cls, params, P) -> "ModelSpec":
        params = np.atleast_2d(np.asarray(params, dtype=float))
        return cls(tuple(RegimeParams.from_array(row) for row in params), TransitionMatrix(P))

    def to_dict(self) -> dict:
        return {
            "regimes": [{n: getattr(r, n) for n in PARAM_NAMES} for r in self.regimes],
            "transition": self.transition.p.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        try:
            regimes = tuple(RegimeParams(**{n: r[n] for n in PARAM_NAMES}) for r in doc["regimes"])
            P = np.asarray(doc["transition"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"malformed model spec: {exc!r}") from exc
        return cls(regimes, TransitionMatrix(P))

    def relabel(self, perm: Sequence[int]) -> "ModelSpec":
        """Spec with regime ``i`` of the result equal to regime ``perm[i]`` of this one."""
        perm = list(perm)
        P = self.transition.p[np.ix_(perm, perm)]
        return ModelSpec(tuple(self.regimes[i] for i in perm), TransitionMatrix(P))


@dataclass(frozen=True)
class SimulationOutput:
    """Simulated series. ``z`` holds regime labels 1..K; ``H[t, j]`` is regime j's variance."""

    y: np.ndarray
    z: np.ndarray
    H: np.ndarray


def weight(gamma: float, y_prev: float) -> float:
    """Component weight ``(1 - e^{-gamma|y|}) / (1 + e^{-gamma|y|})``, in [0, 1)."""
    if not (math.isfinite(gamma) and math.isfinite(y_prev)):
        raise InvalidSpecError("weight inputs must be finite")
    if gamma <= 0:
        raise InvalidSpecError("gamma must be strictly positive")
    e = math.exp(-gamma * abs(y_prev))
    return (1.0 - e) / (1.0 + e)


def _weights(gamma, y_prev):
    e = np.exp(-np.multiply(gamma, np.abs(y_prev)))
    return (1.0 - e) / (1.0 + e)


def regime_variance_step(params: RegimeParams, y_prev: float, H_prev: float):
    """One step of a regime's variance recursion.

    Returns
    -------
    H, h1, h2, w : float
        Combined variance, the two component variances and the weight on ``h1``.
    """
    if not (H_prev > 0 and math.isfinite(H_prev)):
        raise InvalidSpecError(f"previous variance must be positive and finite, got {H_prev}")
    y2 = y_prev * y_prev
    h1 = params.a0 + params.a1 * y2 + params.a2 * H_prev
    h2 = params.b0 + params.b1 * y2 + params.b2 * H_prev
    w = weight(params.gamma, y_prev)
    return w * h1 + (1.0 - w) * h2, h1, h2, w


def variance_paths(params, y, H0) -> np.ndarray:
    """Per-regime variance paths for an observed series.

    ``params`` has shape (..., 7) in ``PARAM_NAMES`` order; the leading axes
    (regimes, grid points, ...) are recursed in parallel. Row ``t`` of the
    result is the variance applicable to ``y[t]``, built from ``y[:t]`` only,
    with ``y[-1] = 0`` before the sample. ``H0`` broadcasts against the leading
    axes of ``params``.

    Returns an array of shape (T, ...).
    """
    params = np.asarray(params, dtype=float)
    y = np.asarray(y, dtype=float)
    a0, a1, a2, b0, b1, b2, gamma = np.moveaxis(params, -1, 0)
    y_prev = np.concatenate(([0.0], y[:-1]))
    shape = (y.shape[0],) + a0.shape
    yp = y_prev.reshape((-1,) + (1,) * a0.ndim)
    y2 = yp * yp
    w = _weights(gamma, yp)
    # H[t] = c[t] + d[t] * H[t-1]
    c = w * (a0 + a1 * y2) + (1.0 - w) * (b0 + b1 * y2)
    d = w * a2 + (1.0 - w) * b2
    c = np.broadcast_to(c, shape)
    d = np.broadcast_to(d, shape)
    H = np.empty(shape)
    h = np.broadcast_to(np.asarray(H0, dtype=float), a0.shape)
    for t in range(shape[0]):
        h = c[t] + d[t] * h
        H[t] = h
    return H


def simulate(spec: ModelSpec, T: int, seed: int, H_init: float = 1.0) -> SimulationOutput:
    """Simulate ``T`` observations.

    ``Z_1`` is drawn from the stationary distribution, every regime's variance
    is advanced each period from ``H_0 = H_init`` and ``y_0 = 0``, and the
    output is a deterministic function of ``seed``.
    """
    T = int(T)
    if T < 1:
        raise InvalidSpecError("T must be at least 1")
    if not (H_init > 0 and math.isfinite(H_init)):
        raise InvalidSpecError("H_init must be positive and finite")
    rng = simulation_rng(seed)
    K = spec.K
    u = rng.random(T)
    eps = rng.standard_normal(T)

    cum = np.cumsum(spec.transition.p, axis=1)
    cum[:, -1] = 1.0
    pi_cum = np.cumsum(spec.transition.stationary)
    pi_cum[-1] = 1.0
    z = np.empty(T, dtype=np.int64)
    z[0] = np.searchsorted(pi_cum, u[0], side="right")
    for t in range(1, T):
        z[t] = np.searchsorted(cum[z[t - 1]], u[t], side="right")

    par = spec.param_matrix()
    a0, a1, a2, b0, b1, b2, g = (par[:, i].tolist() for i in range(7))
    H = np.empty((T, K))
    y = np.empty(T)
    h = [float(H_init)] * K
    y_prev = 0.0
    regimes = range(K)
    exp = math.exp
    sqrt = math.sqrt
    zl = z.tolist()
    el = eps.tolist()
    for t in range(T):
        y2 = y_prev * y_prev
        ay = abs(y_prev)
        for j in regimes:
            e = exp(-g[j] * ay)
            w = (1.0 - e) / (1.0 + e)
            hj = h[j]
            h[j] = w * (a0[j] + a1[j] * y2 + a2[j] * hj) + (1.0 - w) * (b0[j] + b1[j] * y2 + b2[j] * hj)
        H[t] = h
        y_prev = el[t] * sqrt(h[zl[t]])
        y[t] = y_prev
    return SimulationOutput(_frozen(y), _frozen(z + 1), _frozen(H))


def ms_garch_spec(spec: ModelSpec) -> ModelSpec:
    """The single-component (MS-GARCH) projection: every regime gets ``b := a``."""
    regimes = tuple(r.replace(b0=r.a0, b1=r.a1, b2=r.a2) for r in spec.regimes)
    return ModelSpec(regimes, spec.transition)


def benchmark_dgp() -> ModelSpec:
    """Two-regime data generating process used in the simulation study."""
    return ModelSpec(
        (
            RegimeParams(a0=2.2, a1=0.75, a2=0.15, b0=0.7, b1=0.3, b2=0.2, gamma=2.0),
            RegimeParams(a0=0.4, a1=0.15, a2=0.1, b0=0.2, b1=0.1, b2=0.2, gamma=0.5),
        ),
        TransitionMatrix(np.array([[0.85, 0.15], [0.05, 0.95]])),
    )
