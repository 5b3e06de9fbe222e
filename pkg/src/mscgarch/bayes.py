"""Bayesian estimation by Gibbs sampling.

Each iteration draws, in order,

1. the regime path ``z`` by forward filtering, backward sampling,
2. the diagonal transition probabilities from their conjugate beta posteriors,
3. every model parameter from its conditional posterior by Griddy Gibbs:
   the log posterior is evaluated on a uniform grid over the prior interval,
   integrated with the trapezoidal rule and inverted by linear interpolation.

Priors on the model parameters are independent uniforms. Only two regimes
are supported by the transition step.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvalidSpecError, NumericalError
from .filtering import default_h_init, forward_pass, log_normal_density
from .markov import stationary_distribution
from .model import PARAM_NAMES, ModelSpec, variance_paths
from .rng import chain_rng

__all__ = [
    "PriorSpec",
    "GibbsConfig",
    "PosteriorDraws",
    "sample_states",
    "backward_weights",
    "sample_transition",
    "transition_counts",
    "grid_cdf",
    "invert_grid_cdf",
    "griddy_gibbs_update",
    "conditional_loglik",
    "complete_data_loglik",
    "run_gibbs",
    "run_chains",
    "gelman_rubin",
    "parameter_names",
    "table_order",
]

log = logging.getLogger(__name__)

MODELS = ("cgarch", "garch")

# index of each parameter within a regime's row (PARAM_NAMES order)
A0, A1, A2, B0, B1, B2, GAMMA = range(7)

DEFAULT_BOUNDS = {
    "a0": (0.001, 10.0),
    "a1": (0.0, 1.0),
    "a2": (0.0, 1.0),
    "b0": (0.001, 10.0),
    "b1": (0.0, 1.0),
    "b2": (0.0, 1.0),
    "gamma": (0.01, 10.0),
}


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Uniform priors on the model parameters and beta priors on ``eta_ii``.

    ``theta_bounds`` has shape (K, 7, 2) (or (7, 2), shared by all regimes);
    ``eta_beta[i] = (c_ii, c_ij)`` are the beta hyperparameters for the stay
    probability of regime ``i``.
    """

    theta_bounds: np.ndarray = field(
        default_factory=lambda: np.array([DEFAULT_BOUNDS[n] for n in PARAM_NAMES])
    )
    eta_beta: np.ndarray = field(default_factory=lambda: np.ones((2, 2)))

    def __post_init__(self):
        tb = np.array(self.theta_bounds, dtype=float)
        if tb.shape == (7, 2):
            tb = np.broadcast_to(tb, (2, 7, 2)).copy()
        if tb.ndim != 3 or tb.shape[1:] != (7, 2):
            raise InvalidSpecError("theta_bounds must have shape (7, 2) or (K, 7, 2)")
        if not np.all(np.isfinite(tb)):
            raise InvalidSpecError("prior intervals must be finite")
        if np.any(tb[..., 0] >= tb[..., 1]):
            raise InvalidSpecError("prior intervals need lo < hi")
        if np.any(tb[:, [A0, B0], 0] <= 0):
            raise InvalidSpecError("intercept prior intervals must exclude 0")
        if np.any(tb[:, GAMMA, 0] <= 0):
            raise InvalidSpecError("gamma prior interval must exclude 0")
        if np.any(tb[:, [A1, A2, B1, B2], 0] < 0):
            raise InvalidSpecError("ARCH/GARCH coefficient priors must be nonnegative")
        eb = np.array(self.eta_beta, dtype=float)
        if eb.ndim != 2 or eb.shape[1] != 2 or np.any(~(eb > 0)) or not np.all(np.isfinite(eb)):
            raise InvalidSpecError("beta hyperparameters must be positive, shape (K, 2)")
        for a in (tb, eb):
            a.setflags(write=False)
        object.__setattr__(self, "theta_bounds", tb)
        object.__setattr__(self, "eta_beta", eb)

    def bounds(self, k: int, p: int) -> tuple[float, float]:
        lo, hi = self.theta_bounds[k, p]
        return float(lo), float(hi)

    def contains(self, theta: np.ndarray) -> bool:
        tb = self.theta_bounds[: theta.shape[0]]
        return bool(np.all((theta >= tb[..., 0]) & (theta <= tb[..., 1])))


@dataclass(frozen=True)
class GibbsConfig:
    n_iter: int = 500
    n_burnin: int | None = None  # default: 20% of n_iter
    grid_size: int = 33
    seed: int = 0
    identification: bool = True
    model: str = "cgarch"
    keep_paths: bool = False
    H_init: float | None = None

    def __post_init__(self):
        if self.n_burnin is None:
            object.__setattr__(self, "n_burnin", int(0.2 * self.n_iter))
        if not (self.n_iter > self.n_burnin >= 0):
            raise InvalidSpecError("need n_iter > n_burnin >= 0")
        if self.grid_size < 16:
            raise InvalidSpecError("grid_size must be at least 16")
        if self.model not in MODELS:
            raise InvalidSpecError(f"model must be one of {MODELS}")
        if self.seed < 0:
            raise InvalidSpecError("seed must be non-negative")


def sweep_indices(model: str, K: int = 2) -> list[tuple[int, int]]:
    """(regime, parameter) pairs in sampling order: regime 1 first, then a0..gamma."""
    params = range(7) if model == "cgarch" else (A0, A1, A2)
    return [(k, p) for k in range(K) for p in params]


def parameter_names(model: str = "cgarch", K: int = 2) -> list[str]:
    """Names of the sampled parameters in sweep order, e.g. ``a01``, ``gamma2``."""
    return [_pname(p, k) for k, p in sweep_indices(model, K)]


def _pname(p: int, k: int) -> str:
    return f"{PARAM_NAMES[p]}{k + 1}"


def table_order(model: str = "cgarch", K: int = 2) -> list[str]:
    """Reporting order: per regime a- then b-coefficients, then gammas, then etas."""
    rows = []
    coeffs = (A0, A1, A2, B0, B1, B2) if model == "cgarch" else (A0, A1, A2)
    for k in range(K):
        rows += [_pname(p, k) for p in coeffs]
    if model == "cgarch":
        rows += [_pname(GAMMA, k) for k in range(K)]
    rows += [f"eta{k + 1}{k + 1}" for k in range(K)]
    return rows


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """Retained draws of one or more chains.

    ``theta_draws`` columns follow ``theta_names`` (sweep order); for the
    single-component model the b-coefficients equal the a-coefficients and are
    not reported. ``edge_hits[i]`` counts draws of parameter ``i`` that landed
    in the first or last grid cell.
    """

    model: str
    theta_names: list
    theta_draws: np.ndarray
    eta_draws: np.ndarray
    z_draws: np.ndarray | None
    edge_hits: np.ndarray
    loglik: np.ndarray
    n_chains: int = 1
    full_theta: np.ndarray | None = None  # (n, K, 7) complete regime parameters

    @property
    def n(self) -> int:
        return self.theta_draws.shape[0]

    def as_table(self) -> tuple[list[str], np.ndarray]:
        """Columns in reporting order (``table_order``) and the draw matrix."""
        names = self.theta_names + [f"eta{k + 1}{k + 1}" for k in range(self.eta_draws.shape[1])]
        data = np.column_stack([self.theta_draws, self.eta_draws])
        order = table_order(self.model, self.eta_draws.shape[1])
        idx = [names.index(n) for n in order]
        return order, data[:, idx]

    def summary(self) -> dict:
        names, data = self.as_table()
        out = {}
        for name, col in zip(names, data.T):
            q = np.quantile(col, [0.025, 0.5, 0.975])
            out[name] = {
                "mean": float(col.mean()),
                "std": float(col.std(ddof=1)) if col.size > 1 else 0.0,
                "q025": float(q[0]),
                "median": float(q[1]),
                "q975": float(q[2]),
            }
        return out

    def posterior_mean_spec(self) -> ModelSpec:
        """Plug-in spec at the posterior mean of every parameter."""
        theta = self.full_theta.mean(axis=0)
        eta = self.eta_draws.mean(axis=0)
        return ModelSpec.from_arrays(theta, _transition_from_eta(eta))


def _transition_from_eta(eta) -> np.ndarray:
    e11, e22 = eta
    return np.array([[e11, 1.0 - e11], [1.0 - e22, e22]])


def _check_series(y, min_len: int = 1) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DataError("series must be one-dimensional")
    if y.size < min_len:
        raise DataError(f"series needs at least {min_len} observations, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    return y


# ----------------------------------------------------------------------------
# (i) regime path


def _ffbs(theta, P, y, H0, rng) -> tuple[np.ndarray, float]:
    """0-based regime path and the marginal log-likelihood."""
    K = theta.shape[0]
    T = y.shape[0]
    if K == 1:
        H = variance_paths(theta, y, H0)
        return np.zeros(T, dtype=np.int64), float(log_normal_density(y, H[:, 0]).sum())
    H = variance_paths(theta, y, H0)
    ld = log_normal_density(y[:, None], H)
    filtered, loglik = forward_pass(ld, P, stationary_distribution(P))
    u = rng.random(T)
    z = np.empty(T, dtype=np.int64)
    z[-1] = _draw(filtered[-1], u[-1], T - 1)
    for t in range(T - 2, -1, -1):
        z[t] = _draw(filtered[t] * P[:, z[t + 1]], u[t], t)
    return z, loglik


def backward_weights(filtered_t, P, z_next: int) -> np.ndarray:
    """``P(Z_t = j | y_1..y_t, Z_{t+1} = z_next)`` for a 1-based ``z_next``."""
    w = np.asarray(filtered_t, dtype=float) * np.asarray(P, dtype=float)[:, z_next - 1]
    return w / w.sum()


def _draw(weights, u, t) -> int:
    """Inverse-CDF draw of a category from unnormalized ``weights``."""
    total = weights.sum()
    if not total > 0:
        raise NumericalError("zero probability mass in backward sampling", t)
    c = np.cumsum(weights)
    return int(min(np.searchsorted(c, u * total, side="right"), weights.size - 1))


def sample_states(spec: ModelSpec, y, rng: np.random.Generator, H_init: float | None = None) -> np.ndarray:
    """Draw a regime path (labels 1..K) from its posterior given parameters.

    Filtered probabilities come from the forward recursion started at the
    stationary distribution; then ``z_T`` is drawn from the last filtered
    vector and ``z_t`` from ``p(z_t | y_1..y_t) * P[z_t, z_{t+1}]`` backwards.
    """
    y = _check_series(y)
    H0 = default_h_init(y) if H_init is None else H_init
    z, _ = _ffbs(spec.param_matrix(), spec.transition.p, y, H0, rng)
    return z + 1


# ----------------------------------------------------------------------------
# (ii) transition probabilities


def transition_counts(z, K: int = 2) -> np.ndarray:
    """``n[i, j]`` = number of transitions i -> j in the (1-based) path."""
    z = np.asarray(z, dtype=np.int64) - 1
    n = np.zeros((K, K), dtype=np.int64)
    np.add.at(n, (z[:-1], z[1:]), 1)
    return n


def sample_transition(z, prior: PriorSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw ``(eta_11, eta_22)`` from their conjugate beta posteriors."""
    z = np.asarray(z)
    if z.size < 2:
        raise DataError("need a path of length >= 2")
    n = transition_counts(z, 2)
    c = prior.eta_beta
    eta = np.array(
        [
            rng.beta(c[0, 0] + n[0, 0], c[0, 1] + n[0, 1]),
            rng.beta(c[1, 0] + n[1, 1], c[1, 1] + n[1, 0]),
        ]
    )
    # a draw of exactly 0 or 1 would make the chain reducible
    tiny = np.finfo(float).eps
    return np.clip(eta, tiny, 1.0 - tiny)


# ----------------------------------------------------------------------------
# (iii) Griddy Gibbs


def grid_cdf(grid, log_kernel) -> np.ndarray:
    """Unnormalized cumulative integral of ``exp(log_kernel)`` on ``grid``.

    The kernel is rescaled by its maximum first; returns ``Phi`` with
    ``Phi[0] = 0`` (trapezoidal rule).
    """
    grid = np.asarray(grid, dtype=float)
    lk = np.asarray(log_kernel, dtype=float)
    m = lk.max()
    if not np.isfinite(m):
        raise NumericalError("conditional posterior is zero on the whole grid")
    k = np.exp(lk - m)
    return np.concatenate(([0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * np.diff(grid))))


def invert_grid_cdf(grid, cdf, u: float) -> float:
    """Linear-interpolation inverse of a piecewise-linear CDF at ``u`` in [0, cdf[-1]]."""
    grid = np.asarray(grid, dtype=float)
    cdf = np.asarray(cdf, dtype=float)
    j = int(np.searchsorted(cdf, u, side="right")) - 1
    j = min(max(j, 0), grid.size - 2)
    # flat stretches of the CDF carry no mass; skip to the next rising cell
    while cdf[j + 1] == cdf[j] and j < grid.size - 2:
        j += 1
    span = cdf[j + 1] - cdf[j]
    frac = 0.0 if span <= 0 else (u - cdf[j]) / span
    return float(grid[j] + min(max(frac, 0.0), 1.0) * (grid[j + 1] - grid[j]))


def _tie(theta: np.ndarray, model: str) -> np.ndarray:
    if model == "garch":
        theta[..., B0:B2 + 1] = theta[..., A0:A2 + 1]
    return theta


def griddy_gibbs_update(
    param_index,
    theta_current,
    z,
    y,
    prior: PriorSpec,
    G: int,
    rng: np.random.Generator,
    H_init: float | None = None,
    model: str = "cgarch",
) -> tuple[float, bool]:
    """Draw one parameter from its conditional posterior on a grid.

    ``param_index`` is ``(regime, parameter)`` with parameter an index into
    ``PARAM_NAMES`` (or a flat index ``regime * 7 + parameter``). The
    conditional likelihood multiplies ``N(0, H[t, k])`` densities over the
    dates assigned to regime ``k`` by the path ``z`` (labels 1..K), with the
    variance path rebuilt from scratch at every grid point.

    Returns the draw and whether it fell in an edge cell of the grid.
    """
    if isinstance(param_index, (int, np.integer)):
        k, p = divmod(int(param_index), 7)
    else:
        k, p = param_index
    y = _check_series(y)
    H0 = default_h_init(y) if H_init is None else H_init
    lo, hi = prior.bounds(k, p)
    grid = np.linspace(lo, hi, G)
    # uniform prior: the log posterior is the log-likelihood up to a constant
    lp = conditional_loglik((k, p), grid, theta_current, z, y, H0, model)
    cdf = grid_cdf(grid, lp)
    u = rng.uniform(0.0, cdf[-1])
    value = invert_grid_cdf(grid, cdf, u)
    edge = value <= grid[1] or value >= grid[-2]
    return value, bool(edge)


def conditional_loglik(param_index, values, theta, z, y, H_init: float, model: str = "cgarch") -> np.ndarray:
    """Log-likelihood of the dates in regime ``k`` with parameter ``p`` set to each of ``values``.

    Only regime ``k``'s factor of the complete-data likelihood depends on its
    own parameters, so the other dates are left out.
    """
    k, p = param_index
    theta = np.asarray(theta, dtype=float)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    rows = np.repeat(theta[k][None, :], values.size, axis=0)
    rows[:, p] = values
    rows = _tie(rows, model)
    mask = np.asarray(z) == k + 1
    H = variance_paths(rows, y, H_init)
    lp = log_normal_density(y[mask, None], H[mask]).sum(axis=0)
    return np.where(np.isnan(lp), -np.inf, lp)


def complete_data_loglik(theta, z, y, H_init: float | None = None) -> float:
    """``sum_t log f(y_t | theta, z_t, y_1..y_{t-1})`` along a given path (labels 1..K)."""
    y = _check_series(y)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    H0 = default_h_init(y) if H_init is None else H_init
    H = variance_paths(theta, y, H0)
    idx = np.asarray(z, dtype=np.int64) - 1
    return float(log_normal_density(y, H[np.arange(y.size), idx]).sum())


# ----------------------------------------------------------------------------
# driver


def default_start(y, prior: PriorSpec, model: str = "cgarch") -> tuple[np.ndarray, np.ndarray]:
    """Data-scaled starting point with regime 1 the high-volatility regime."""
    v = float(np.var(y))
    theta = np.array(
        [
            [1.0 * v, 0.3, 0.2, 0.5 * v, 0.15, 0.2, 1.0],
            [0.3 * v, 0.15, 0.2, 0.15 * v, 0.05, 0.2, 1.0],
        ]
    )
    tb = prior.theta_bounds[:2]
    span = tb[..., 1] - tb[..., 0]
    theta = np.clip(theta, tb[..., 0] + 0.01 * span, tb[..., 1] - 0.01 * span)
    return _tie(theta, model), np.array([0.9, 0.9])


def _disperse(theta, prior: PriorSpec, rng, model):
    """Random start: each parameter moved towards a uniform point of its prior interval."""
    tb = prior.theta_bounds[: theta.shape[0]]
    target = rng.uniform(tb[..., 0], tb[..., 1])
    mix = rng.uniform(0.2, 0.6, size=theta.shape)
    out = (1 - mix) * theta + mix * target
    return _tie(out, model)


def _identify(theta, eta, z):
    """Relabel so that regime 1 has the larger intercept a0."""
    if theta[0, A0] < theta[1, A0]:
        return theta[::-1].copy(), eta[::-1].copy(), 3 - z
    return theta, eta, z


def run_gibbs(
    y,
    prior: PriorSpec | None = None,
    cfg: GibbsConfig | None = None,
    init: ModelSpec | None = None,
    chain: int = 0,
    progress=None,
) -> PosteriorDraws:
    """Run one Gibbs chain on ``y`` (K = 2 regimes).

    ``init`` overrides the data-scaled starting point; ``chain`` selects an
    independent random stream (and, for ``chain > 0`` without ``init``, a
    dispersed start). ``progress`` is an optional callable ``(iteration)``.
    """
    prior = prior or PriorSpec()
    cfg = cfg or GibbsConfig()
    y = _check_series(y, 30)
    K = 2
    rng = chain_rng(cfg.seed, chain)
    H0 = cfg.H_init if cfg.H_init is not None else default_h_init(y)
    if init is not None:
        if init.K != K:
            raise InvalidSpecError("Gibbs estimation supports two regimes only")
        theta = _tie(init.param_matrix(), cfg.model)
        eta = np.diag(init.transition.p).copy()
    else:
        theta, eta = default_start(y, prior, cfg.model)
        if chain > 0:
            theta = _disperse(theta, prior, rng, cfg.model)
            eta = rng.uniform(0.6, 0.98, size=2)
    tb = prior.theta_bounds[:K]
    theta = _tie(np.clip(theta, tb[..., 0], tb[..., 1]), cfg.model)

    sweep = sweep_indices(cfg.model, K)
    names = [_pname(p, k) for k, p in sweep]
    n_keep = cfg.n_iter - cfg.n_burnin
    theta_draws = np.empty((n_keep, len(sweep)))
    full = np.empty((n_keep, K, 7))
    eta_draws = np.empty((n_keep, K))
    loglik = np.empty(cfg.n_iter)
    z_draws = np.empty((n_keep, y.size), dtype=np.int8) if cfg.keep_paths else None
    edge_hits = np.zeros(len(sweep), dtype=np.int64)

    for it in range(cfg.n_iter):
        P = _transition_from_eta(eta)
        try:
            z0, ll = _ffbs(theta, P, y, H0, rng)
        except NumericalError as exc:
            raise NumericalError(f"state sampling failed: {exc}", it) from exc
        loglik[it] = ll
        z = z0 + 1
        eta = sample_transition(z, prior, rng)
        for i, (k, p) in enumerate(sweep):
            try:
                value, edge = griddy_gibbs_update(
                    (k, p), theta, z, y, prior, cfg.grid_size, rng, H0, cfg.model
                )
            except NumericalError as exc:
                raise NumericalError(f"Griddy Gibbs diverged for {names[i]}: {exc}", it) from exc
            theta[k, p] = value
            theta = _tie(theta, cfg.model)
            if it >= cfg.n_burnin:
                edge_hits[i] += edge
        if cfg.identification:
            theta, eta, z = _identify(theta, eta, z)
        if it >= cfg.n_burnin:
            r = it - cfg.n_burnin
            theta_draws[r] = [theta[k, p] for k, p in sweep]
            full[r] = theta
            eta_draws[r] = eta
            if z_draws is not None:
                z_draws[r] = z
        if progress is not None:
            progress(it)
    return PosteriorDraws(
        model=cfg.model,
        theta_names=names,
        theta_draws=theta_draws,
        eta_draws=eta_draws,
        z_draws=z_draws,
        edge_hits=edge_hits,
        loglik=loglik,
        full_theta=full,
    )


def run_chains(
    y, prior: PriorSpec | None = None, cfg: GibbsConfig | None = None, n_chains: int = 1, init=None
) -> tuple[PosteriorDraws, list[PosteriorDraws]]:
    """Run ``n_chains`` independent chains and pool their retained draws."""
    if n_chains < 1:
        raise InvalidSpecError("need at least one chain")
    chains = [run_gibbs(y, prior, cfg, init=init, chain=c) for c in range(n_chains)]
    if n_chains == 1:
        return chains[0], chains
    first = chains[0]
    pooled = dataclasses.replace(
        first,
        theta_draws=np.concatenate([c.theta_draws for c in chains]),
        eta_draws=np.concatenate([c.eta_draws for c in chains]),
        z_draws=None if first.z_draws is None else np.concatenate([c.z_draws for c in chains]),
        edge_hits=sum(c.edge_hits for c in chains),
        loglik=np.concatenate([c.loglik for c in chains]),
        full_theta=np.concatenate([c.full_theta for c in chains]),
        n_chains=n_chains,
    )
    return pooled, chains


def gelman_rubin(chains: list[np.ndarray]) -> np.ndarray:
    """Potential scale reduction factor per column for equal-length chains."""
    x = np.stack([np.asarray(c, dtype=float) for c in chains])  # (m, n, p)
    m, n = x.shape[:2]
    if m < 2 or n < 2:
        raise ValueError("need at least two chains of length >= 2")
    means = x.mean(axis=1)
    W = x.var(axis=1, ddof=1).mean(axis=0)
    B = n * means.var(axis=0, ddof=1)
    var_hat = (n - 1) / n * W + B / n
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(var_hat / W)
    return np.where(W > 0, r, 1.0)
