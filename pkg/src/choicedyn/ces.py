"""CES demand and its logit equivalence.

Maximising the constant-elasticity aggregate U(X) = (sum_j X_j^rho)^(1/rho)
on the budget plane sum_j X_j p_j = Y yields expenditure shares

    share_i = (lambda p_i)^(rho/(rho-1)) / sum_j (lambda p_j)^(rho/(rho-1)),

a multinomial logit in U_i/sigma = (rho/(rho-1)) * log(lambda p_i).  The
multiplier lambda cancels in the ratio.  ``ces_demand_oracle`` recovers the
same shares by direct derivative-free maximisation so the closed form can
be cross-checked without sharing any code path with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import mnl
from .errors import ConvergenceError, DomainError

__all__ = ["CesProblem", "ces_utility", "ces_demand_oracle", "mnl_from_prices"]


@dataclass(frozen=True)
class CesProblem:
    """Substitution problem: elasticity parameter, prices and budget."""

    rho: float
    prices: np.ndarray
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "prices", np.asarray(self.prices, dtype=float))
        if not (0.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie in (0, 1), got {self.rho!r}")
        if self.prices.ndim != 1 or self.prices.size == 0:
            raise DomainError("prices must be a non-empty 1-d vector")
        if not np.all(np.isfinite(self.prices)) or np.any(self.prices <= 0.0):
            raise DomainError("prices must be finite and > 0")
        if not np.isfinite(self.budget) or self.budget <= 0.0:
            raise DomainError(f"budget must be finite and > 0, got {self.budget!r}")

    @property
    def n(self) -> int:
        return self.prices.size


def ces_utility(quantities, rho: float) -> float:
    """CES aggregate (sum_j X_j^rho)^(1/rho); homogeneous of degree one."""
    if not (0.0 < rho < 1.0):
        raise DomainError(f"rho must lie in (0, 1), got {rho!r}")
    x = np.asarray(quantities, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("quantities must be a non-empty 1-d vector")
    if np.any(x < 0.0) or not np.all(np.isfinite(x)):
        raise DomainError("quantities must be finite and >= 0")
    if not np.any(x > 0.0):
        raise DomainError("at least one quantity must be positive")
    return float((x**rho).sum() ** (1.0 / rho))


def _utility_of_expenditure_shares(e: np.ndarray, prob: CesProblem) -> float:
    # spend share e_i buys e_i * Y / p_i units
    x = e * prob.budget / prob.prices
    return float((x**prob.rho).sum())  # monotone proxy for the CES aggregate


def ces_demand_oracle(
    prob: CesProblem, rel_tol: float = 1e-8, max_sweeps: int = 20_000
) -> np.ndarray:
    """Maximise the CES aggregate on the budget plane by coordinate search.

    Works on the expenditure-share simplex: repeatedly tries moving a step
    of expenditure between every ordered pair of goods, halving the step
    whenever a full sweep brings no improvement, until the step falls below
    ``rel_tol``.  Derivative-free and independent of the closed form.

    Returns the maximising quantities X_i.  Raises ConvergenceError if the
    sweep budget is exhausted before the step is resolved.
    """
    n = prob.n
    e = np.full(n, 1.0 / n)
    best = _utility_of_expenditure_shares(e, prob)
    step = 0.25
    sweeps = 0
    while step >= rel_tol:
        improved = False
        for i in range(n):
            for j in range(n):
                if i == j or e[j] < step:
                    continue
                trial = e.copy()
                trial[i] += step
                trial[j] -= step
                value = _utility_of_expenditure_shares(trial, prob)
                if value > best:
                    e, best = trial, value
                    improved = True
        if not improved:
            step *= 0.5
        sweeps += 1
        if sweeps > max_sweeps:
            raise ConvergenceError(
                "CES coordinate search exhausted its sweep budget", residual=step
            )
    return e * prob.budget / prob.prices


def mnl_from_prices(prob: CesProblem, lambda_: float = 1.0) -> np.ndarray:
    """Closed-form CES expenditure shares as a logit in log prices.

    share_i = (lambda p_i)^(rho/(rho-1)) / sum_j (...); evaluated through
    ``mnl`` on U_i = (rho/(rho-1)) * log(lambda p_i) with sigma = 1, so the
    multiplier lambda drops out of the ratio.
    """
    if not np.isfinite(lambda_) or lambda_ <= 0.0:
        raise DomainError(f"lambda must be finite and > 0, got {lambda_!r}")
    exponent = prob.rho / (prob.rho - 1.0)  # negative: dearer goods get less
    return mnl(exponent * np.log(lambda_ * prob.prices), 1.0)
