"""Equilibrium discrete choice: logit probabilities and log-sum aggregates.

A population of non-interacting utility maximisers whose preference spread
is Gumbel with width ``sigma`` chooses among products with mean utilities
``U_i``.  Choice probabilities are the multinomial logit softmax(U/sigma);
the log-sum (representative) utility, the probability-weighted average
utility and the choice entropy are the aggregate welfare quantities, tied
together by the consumer-surplus identity

    U_rep - U_avg = sigma * entropy.

All functions are pure and stateless.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = [
    "binary_logit",
    "mnl",
    "representative_utility",
    "average_utility",
    "entropy",
]


def check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise DomainError(f"sigma must be finite and > 0, got {sigma!r}")
    return sigma


def as_utilities(values) -> np.ndarray:
    """Coerce to a finite, non-empty 1-d float vector."""
    u = np.asarray(values, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise DomainError("utilities must be a non-empty 1-d vector")
    if not np.all(np.isfinite(u)):
        raise DomainError("utilities must be finite")
    return u


def logistic(x: float) -> float:
    # evaluate on the branch whose exponent is non-positive; never overflows
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def binary_logit(u_i: float, u_j: float, sigma: float) -> float:
    """Probability that option i is chosen over option j.

    The two-option closed form 1 / (1 + exp(-(u_i - u_j)/sigma)); it
    depends on the utilities only through their difference, and
    ``binary_logit(a, b, s) + binary_logit(b, a, s) == 1``.
    """
    sigma = check_sigma(sigma)
    if not (np.isfinite(u_i) and np.isfinite(u_j)):
        raise DomainError("utilities must be finite")
    return logistic((u_i - u_j) / sigma)


def mnl(utilities, sigma: float) -> np.ndarray:
    """Multinomial logit choice probabilities exp(U_i/sigma) / sum_j exp(U_j/sigma).

    Stabilised by subtracting max(U)/sigma before exponentiating, which
    also makes the result exactly invariant under a common utility shift.
    """
    u = as_utilities(utilities)
    sigma = check_sigma(sigma)
    w = np.exp((u - u.max()) / sigma)
    return w / w.sum()


def representative_utility(utilities, sigma: float) -> float:
    """Log-sum aggregate sigma * log(sum_j exp(U_j/sigma)).

    The welfare measure of the representative chooser; always >= max(U),
    with equality only for a single option.
    """
    u = as_utilities(utilities)
    sigma = check_sigma(sigma)
    m = u.max()
    return float(m + sigma * np.log(np.exp((u - m) / sigma).sum()))


def average_utility(utilities, sigma: float) -> float:
    """Choice-probability-weighted mean utility sum_i U_i P_i under the MNL."""
    u = as_utilities(utilities)
    return float(np.dot(u, mnl(u, sigma)))


def entropy(probabilities) -> float:
    """Shannon entropy -sum_i P_i log P_i of a probability vector.

    Terms with P_i = 0 contribute 0 (the x*log(x) -> 0 limit).  Ranges
    from 0 at a vertex to log(n) at the uniform distribution.
    """
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("probabilities must be a non-empty 1-d vector")
    if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
        raise DomainError("probabilities must lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"probabilities must sum to 1, got {p.sum()!r}")
    pos = p > 0.0
    return float(-(p[pos] * np.log(p[pos])).sum())
