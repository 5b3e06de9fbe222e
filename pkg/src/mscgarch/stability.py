"""Second-moment stability of the MS-CGARCH process.

With ``A_t(m, k) = E[H_{t,m} | Z_t = k]`` stacked regime-by-regime into a
K^2 vector, the conditional second moments satisfy the elementwise
recursive inequality ``A_t <= Omega_dot + C A_{t-1}``. The process is stable
in variance iff ``rho(C) < 1``, in which case
``lim E(y_t^2) <= Pi' (I - C)^{-1} Omega_dot``.
"""

from __future__ import annotations

import logging
import math
import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from .errors import ConvergenceError, InvalidSpecError, NumericalError
from .markov import stationary_distribution
from .model import ModelSpec

__all__ = [
    "StabilityReport",
    "stationary_distribution",
    "truncation_threshold",
    "backward_probabilities",
    "build_stability_system",
    "spectral_radius",
    "second_moment_bound",
    "analyze",
]

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.01


@dataclass(frozen=True, eq=False)
class StabilityReport:
    pi: np.ndarray
    delta: float
    M: np.ndarray
    Omega: np.ndarray
    u: np.ndarray
    v: np.ndarray
    backward: np.ndarray
    C: np.ndarray
    Omega_dot: np.ndarray
    Pi: np.ndarray
    rho: float | None = None
    stable: bool | None = None
    bound: float | None = None
    condition_number: float | None = None
    threshold_convention: str = "per-regime"
    form: str = "general"

    def to_dict(self) -> dict:
        doc = {
            "rho": self.rho,
            "stable": self.stable,
            "bound": self.bound,
            "delta": self.delta,
            "M": self.M.tolist(),
            "pi": self.pi.tolist(),
            "Omega": self.Omega.tolist(),
            "threshold_convention": self.threshold_convention,
            "form": self.form,
        }
        if self.condition_number is not None:
            doc["condition_number"] = self.condition_number
        return doc


def truncation_threshold(gamma: float, delta: float) -> float:
    """Smallest ``M`` with ``weight(gamma, M) >= 1 - delta``."""
    if not 0.0 < delta < 1.0:
        raise InvalidSpecError("delta must lie in (0, 1)")
    if not gamma > 0:
        raise InvalidSpecError("gamma must be strictly positive")
    return math.log((2.0 - delta) / delta) / gamma


def backward_probabilities(P, pi=None) -> np.ndarray:
    """``B[j, k] = P(Z_{t-1} = j | Z_t = k) = pi_j P[j, k] / pi_k``."""
    P = np.asarray(P, dtype=float)
    if pi is None:
        pi = stationary_distribution(P)
    return pi[:, None] * P / pi[None, :]


def build_stability_system(
    spec: ModelSpec, delta: float = DEFAULT_DELTA, form: str = "general"
) -> StabilityReport:
    """Assemble ``Omega``, ``C`` and ``Pi`` (no spectral radius or bound yet).

    Block ``(row k, column j)`` of ``C`` is
    ``P(Z_{t-1}=j | Z_t=k) * (u e_j' + v)``, mapping the moments conditional on
    ``Z_{t-1} = j`` into those conditional on ``Z_t = k``, with
    ``u = b1 + (1 + delta)|a1 - b1|`` and ``Omega = c0 + |a1 - b1| M^2``.

    ``form="literal"`` uses ``c0 = a0`` and ``v = diag(a2)``, which bounds the
    second moment only when the first component dominates (``a0 >= b0`` and
    ``a2 >= b2`` in every regime). ``form="general"`` (default) uses
    ``c0 = max(a0, b0)`` and ``v = diag(max(a2, b2))``; the two coincide under
    that ordering.
    """
    if form not in ("general", "literal"):
        raise InvalidSpecError(f"unknown stability form {form!r}")
    K = spec.K
    par = spec.param_matrix()
    a0, a1, a2, b0, b1, b2, gamma = par.T
    if form == "general":
        a0 = np.maximum(a0, b0)
        a2 = np.maximum(a2, b2)
    M = np.array([truncation_threshold(g, delta) for g in gamma])
    d1 = np.abs(a1 - b1)
    Omega = a0 + d1 * M**2
    u = b1 + (1.0 + delta) * d1
    v = np.diag(a2)
    pi = spec.transition.stationary
    B = backward_probabilities(spec.transition.p, pi)

    C = np.zeros((K * K, K * K))
    for k in range(K):
        for j in range(K):
            block = v.copy()
            block[:, j] += u
            C[k * K:(k + 1) * K, j * K:(j + 1) * K] = B[j, k] * block
    Pi = np.zeros(K * K)
    for k in range(K):
        Pi[k * K + k] = pi[k]
    return StabilityReport(
        pi=pi,
        delta=float(delta),
        M=M,
        Omega=Omega,
        u=u,
        v=v,
        backward=B,
        C=C,
        Omega_dot=np.tile(Omega, K),
        Pi=Pi,
        form=form,
    )


def spectral_radius(A, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Spectral radius of a nonnegative square matrix.

    The matrix is split into its strongly connected components (irreducible
    diagonal blocks of the Frobenius normal form); the spectral radius is the
    largest Perron root among them. Each block's root comes from power
    iteration on ``block + s I`` with ``s = max(block)``, which is primitive, so
    the Collatz-Wielandt bracket ``min (Bx)_i / x_i <= rho + s <= max (Bx)_i / x_i``
    closes geometrically. Iteration stops once the bracket is narrower than
    ``tol * max(1, rho)``.

    Raises
    ------
    ConvergenceError
        If a block's bracket is still open after ``max_iter`` iterations.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    if np.any(A < 0):
        raise ValueError("matrix must be nonnegative")
    n_comp, labels = scipy.sparse.csgraph.connected_components(
        scipy.sparse.csr_matrix(A > 0), directed=True, connection="strong"
    )
    rho = 0.0
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        rho = max(rho, _perron_root(A[np.ix_(idx, idx)], tol, max_iter))
    return rho


def _perron_root(block: np.ndarray, tol: float, max_iter: int) -> float:
    n = block.shape[0]
    if n == 1:
        return float(block[0, 0])
    s = float(block.max())
    B = block + s * np.eye(n)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = B @ x
        r = y / x
        lo, hi = r.min() - s, r.max() - s
        if hi - lo <= tol * max(1.0, abs(hi)):
            return float(max(0.5 * (lo + hi), 0.0))
        x = y / y.sum()
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def second_moment_bound(report: StabilityReport) -> StabilityReport:
    """Fill in ``rho``, ``stable`` and ``bound`` (present only when rho < 1).

    ``(I - C)^{-1} Omega_dot`` comes from an LU solve, never an explicit inverse.
    """
    try:
        rho = spectral_radius(report.C)
    except ConvergenceError:
        log.warning("power iteration failed, falling back to a dense eigensolver")
        rho = float(np.max(np.abs(np.linalg.eigvals(report.C))))
    stable = rho < 1.0
    bound = None
    cond = None
    if stable:
        I_C = np.eye(report.C.shape[0]) - report.C
        try:
            lu = scipy.linalg.lu_factor(I_C, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"I - C is singular although rho(C) = {rho} < 1") from exc
        if np.any(np.diag(lu[0]) == 0):
            raise NumericalError(f"I - C is singular although rho(C) = {rho} < 1")
        x = scipy.linalg.lu_solve(lu, report.Omega_dot)
        bound = float(report.Pi @ x)
        c = float(np.linalg.cond(I_C))
        if c > 1e8:
            cond = c
            log.warning("I - C is ill conditioned (cond = %.3g)", c)
        if not (bound > 0 and math.isfinite(bound)):
            raise NumericalError(f"second-moment bound is not positive: {bound}")
    return dataclasses.replace(
        report, rho=float(rho), stable=bool(stable), bound=bound, condition_number=cond
    )


def analyze(spec: ModelSpec, delta: float = DEFAULT_DELTA, form: str = "general") -> StabilityReport:
    return second_moment_bound(build_stability_system(spec, delta, form))

