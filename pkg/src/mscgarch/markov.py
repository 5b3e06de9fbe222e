"""Finite Markov chain utilities."""

import numpy as np

from .errors import InvalidSpecError


def is_primitive(P) -> bool:
    """True if the chain is irreducible and aperiodic.

    A nonnegative K x K matrix is primitive iff its ((K-1)^2 + 1)-th power is
    strictly positive (Wielandt), which is checked on the support pattern only.
    """
    A = (np.asarray(P) > 0).astype(np.int64)
    K = A.shape[0]
    power = (K - 1) ** 2 + 1
    R = np.eye(K, dtype=np.int64)
    base = A
    # square-and-multiply on boolean patterns
    while power:
        if power & 1:
            R = np.minimum(R @ base, 1)
        base = np.minimum(base @ base, 1)
        power >>= 1
    return bool(R.all())


def stationary_distribution(P) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi P = pi`` and ``sum(pi) = 1``.

    Raises ``InvalidSpecError`` for reducible or periodic chains, for which the
    limiting distribution is not unique.
    """
    P = np.asarray(getattr(P, "p", P), dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidSpecError("transition matrix must be square")
    K = P.shape[0]
    if K == 1:
        return np.ones(1)
    if not is_primitive(P):
        raise InvalidSpecError("transition matrix is not irreducible and aperiodic")
    # (P' - I) pi = 0 with one equation replaced by the normalization
    A = P.T - np.eye(K)
    A[-1, :] = 1.0
    b = np.zeros(K)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()
