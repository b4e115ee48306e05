"""Numerical verification reports behind the ``verify-*`` CLI subcommands.

Each routine returns a list of :class:`Check` rows.  Rows with a tolerance
are contractual (their failure fails the verification); rows without one
are informational, used to document where the source derivations disagree
with direct differentiation of the definitions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ces import CesProblem, ces_demand_oracle, mnl_from_prices
from .dynamics import Market, interacting_preferences, self_consistency_iterate
from .scenario import Scenario, integrate
from .thermo import aggregates, cross_derivative_check, partials

__all__ = [
    "Check",
    "verify_ces",
    "verify_thermo",
    "verify_appendix_b",
    "verify_appendix_c",
    "all_passed",
]


@dataclass(frozen=True)
class Check:
    """One verification row: a named residual, optionally held to a tolerance."""

    name: str
    residual: float
    tolerance: float | None = None
    passed: bool | None = None
    note: str = ""


def _check(name: str, residual: float, tolerance: float, note: str = "") -> Check:
    return Check(name, float(residual), tolerance, bool(residual <= tolerance), note)


def _info(name: str, residual: float, note: str = "") -> Check:
    return Check(name, float(residual), None, None, note)


def all_passed(checks) -> bool:
    return all(c.passed for c in checks if c.passed is not None)


# --------------------------------------------------------------------------
# CES demand vs closed-form shares


def verify_ces(n_problems: int = 100, seed: int = 20240817) -> list:
    """Brute-force CES maximisation vs the closed-form expenditure shares."""
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    start = time.perf_counter()
    for k in range(n_problems):
        n = int(rng.integers(2, 7))
        prob = CesProblem(
            rho=float(rng.uniform(0.1, 0.9)),
            prices=rng.uniform(0.1, 10.0, n),
            budget=float(rng.uniform(0.5, 5.0)),
        )
        x = ces_demand_oracle(prob)
        oracle_shares = x * prob.prices / prob.budget
        closed = mnl_from_prices(prob)
        err = float(np.abs(oracle_shares - closed).max())
        worst = max(worst, err)
        checks.append(
            _check(f"problem {k:03d} (n={n}, rho={prob.rho:.2f})", err, 1e-5)
        )
    elapsed = time.perf_counter() - start
    checks.append(_check("max share error over all problems", worst, 1e-5))
    checks.append(_check("runtime (seconds)", elapsed, 30.0))
    return checks


# --------------------------------------------------------------------------
# aggregate-quantity calculus


def _random_interior_state(rng, n):
    s = rng.dirichlet(np.full(n, 2.0))
    while s.min() < 1e-3:
        s = rng.dirichlet(np.full(n, 2.0))
    u = rng.uniform(-1.5, 1.5, n)
    return s, u


def _fd_partials(s, m, h=1e-6):
    """Central finite differences of the three aggregates, order: ent, avg, rep."""
    n = m.n
    out = np.empty((6, n))
    for i in range(n):
        hi, lo = s.copy(), s.copy()
        hi[i] += h
        lo[i] -= h
        a_hi, a_lo = aggregates(hi, m), aggregates(lo, m)
        out[0, i] = (a_hi.entropy - a_lo.entropy) / (2 * h)
        out[2, i] = (a_hi.average_utility - a_lo.average_utility) / (2 * h)
        out[4, i] = (a_hi.representative_utility - a_lo.representative_utility) / (2 * h)
        m_hi = m.set_utility(i, m.baseline_utilities[i] + h)
        m_lo = m.set_utility(i, m.baseline_utilities[i] - h)
        a_hi, a_lo = aggregates(s, m_hi), aggregates(s, m_lo)
        out[1, i] = (a_hi.entropy - a_lo.entropy) / (2 * h)
        out[3, i] = (a_hi.average_utility - a_lo.average_utility) / (2 * h)
        out[5, i] = (a_hi.representative_utility - a_lo.representative_utility) / (2 * h)
    return out


def verify_thermo(n_states: int = 200, seed: int = 20240818) -> list:
    """Check the aggregate-quantity calculus and report source-table conflicts.

    Contractual rows: the six analytic partials against finite differences,
    the zero column-sum of the entropy/utility derivatives, the mixed
    second-derivative symmetry and the equilibrium surplus identity.
    Informational rows compare the summary-table expressions, which
    disagree with direct differentiation of the definitions, and record
    each residual instead of asserting it.
    """
    rng = np.random.default_rng(seed)
    names = [
        "d entropy / d shares",
        "d entropy / d utilities",
        "d avg utility / d shares",
        "d avg utility / d utilities",
        "d rep utility / d shares",
        "d rep utility / d utilities",
    ]
    fd_err = np.zeros(6)
    sum_ent_u = 0.0
    cross_res = 0.0
    eq_surplus = 0.0
    table_res = np.zeros(9)
    surplus_res = 0.0
    share_sum_res = 0.0

    for k in range(n_states):
        n = int(rng.integers(2, 7))
        s, u = _random_interior_state(rng, n)
        sigma = float(rng.uniform(0.4, 2.0))
        m = Market(u, tau=np.ones(n), sigma=sigma, alpha=sigma)  # strongly interacting
        p = partials(s, m)
        analytic = np.vstack([
            p.d_entropy_d_shares,
            p.d_entropy_d_utilities,
            p.d_average_d_shares,
            p.d_average_d_utilities,
            p.d_representative_d_shares,
            p.d_representative_d_utilities,
        ])
        fd = _fd_partials(s, m)
        scale = np.maximum(np.abs(fd), 1e-3)
        fd_err = np.maximum(fd_err, (np.abs(analytic - fd) / scale).max(axis=1))
        sum_ent_u = max(sum_ent_u, abs(p.d_entropy_d_utilities.sum()))

        if k < 25:  # nested finite differences are costlier
            cross_res = max(cross_res, float(cross_derivative_check(s, m).max()))

        # equilibrium surplus identity (no interactions)
        m0 = Market(u, tau=np.ones(n), sigma=sigma, alpha=0.0)
        eq_surplus = max(eq_surplus, abs(aggregates(s, m0).surplus_residual))

        # summary-table expressions at alpha = sigma, against the direct values
        prob = interacting_preferences(s, m)
        avg = float((prob * u).sum())
        table = [
            (prob / (sigma * s) * (sigma + avg - u), p.d_entropy_d_shares),
            (prob / sigma**2 * (avg - u), p.d_entropy_d_utilities),
            (-prob / (sigma * s**2) * (avg - u), p.d_average_d_shares),
            (prob / sigma * (sigma - avg + u), p.d_average_d_utilities),
            (prob, p.d_representative_d_shares),
            (sigma * prob / s, p.d_representative_d_utilities),
            ((s / sigma) * p.d_representative_d_shares, p.d_representative_d_utilities),
            (-(s / sigma) * p.d_average_d_shares, p.d_entropy_d_utilities),
            (-p.d_average_d_utilities / s + 2 * prob / s, p.d_entropy_d_shares),
        ]
        for idx, (lhs, rhs) in enumerate(table):
            table_res[idx] = max(table_res[idx], float(np.abs(lhs - rhs).max()))
        surplus_res = max(surplus_res, abs(aggregates(s, m).surplus_residual))
        # claimed column sum over shares: <1/S> - (1/sigma)<U/S> + <U><1/S>
        claimed = float((prob / s).sum() - (prob * u / s).sum() / sigma + avg * (prob / s).sum())
        share_sum_res = max(share_sum_res, abs(p.d_entropy_d_shares.sum() - claimed))

    checks = [
        _check(f"{name} vs finite differences (rel)", fd_err[i], 1e-6)
        for i, name in enumerate(names)
    ]
    checks.append(_check("sum_i d entropy / d U_i = 0", sum_ent_u, 1e-10))
    checks.append(_check("mixed d2 rep-utility symmetry (conservativity)", cross_res, 1e-4))
    checks.append(_check("equilibrium surplus identity (alpha=0)", eq_surplus, 1e-10))

    table_names = [
        "summary-table d entropy/d shares = P(sigma+<U>-U)/(sigma S)",
        "summary-table d entropy/d utilities = P(<U>-U)/sigma^2",
        "summary-table d avg/d shares = -P(<U>-U)/(sigma S^2)",
        "summary-table d avg/d utilities = P(sigma-<U>+U)/sigma",
        "summary-table d rep/d shares = P",
        "summary-table d rep/d utilities = sigma P / S",
        "identity d rep/dU = (S/sigma) d rep/dS",
        "identity d ent/dU = -(S/sigma) d avg/dS",
        "identity d ent/dS = -(1/S) d avg/dU + 2P/S",
    ]
    for idx, name in enumerate(table_names):
        agrees = table_res[idx] <= 1e-9
        note = "matches direct differentiation" if agrees else "conflicts with direct differentiation; residual reported"
        checks.append(_info(name, table_res[idx], note))
    checks.append(_info(
        "interacting surplus identity sigma*S = U_rep - U_avg",
        surplus_res,
        "holds only at alpha=0 and at vertices; residual reported",
    ))
    checks.append(_info(
        "sum_i d entropy/dS_i = <1/S> - (1/sigma)<U/S> + <U><1/S>",
        share_sum_res,
        "claimed column sum vs direct differentiation; residual reported",
    ))
    return checks


# --------------------------------------------------------------------------
# degeneracy of the self-consistent equilibrium


def verify_appendix_b(n_runs: int = 1000, n_products: int = 4, seed: int = 20240819) -> list:
    """Iterating S <- P(S) from random interior starts must end at vertices."""
    rng = np.random.default_rng(seed)
    vertices = 0
    worst_iters = 0
    for _ in range(n_runs):
        while True:
            u = np.sort(rng.uniform(-1.0, 1.0, n_products))[::-1]
            if np.diff(u[::-1]).min() >= 0.05:  # distinct utilities, bounded iteration count
                break
        m = Market(u, tau=np.ones(n_products), sigma=1.0, alpha=1.0)
        s0 = rng.dirichlet(np.ones(n_products))
        result = self_consistency_iterate(m, s0)
        if result.converged and result.reached_vertex:
            vertices += 1
        worst_iters = max(worst_iters, result.iterations)
    checks = [
        _check(f"runs converging to a vertex ({vertices}/{n_runs})",
               float(n_runs - vertices), 0.0),
        _info("worst-case iterations", float(worst_iters)),
    ]
    return checks


# --------------------------------------------------------------------------
# replicator vs pairwise exchange


def _trajectory_gap(a, b):
    """Mean L1 distance between two logs, relative to the larger total variation."""
    d = np.abs(a.shares - b.shares).sum(axis=1)
    tv = max(np.abs(np.diff(a.shares, axis=0)).sum(), np.abs(np.diff(b.shares, axis=0)).sum())
    return float(d.mean() / tv), float(d.max() / tv)


def _regime_scenario(spread: float, engine: str) -> Scenario:
    n = 4
    u = np.linspace(spread / 2.0, -spread / 2.0, n)
    m = Market(u, tau=np.ones(n), sigma=1.0, alpha=1.0)
    return Scenario(
        market=m,
        initial_shares=np.full(n, 1.0 / n),
        t_end=80.0,
        dt=0.02,
        engine=engine,
        seed=0,
    )


def verify_appendix_c(seed: int = 0) -> list:
    """Agreement of the fitness and pairwise-exchange forms in the weak regime.

    Within max|U_i - U_j| <= sigma/2 and t_acq = tau the integrated
    trajectories must stay within 5% (mean L1 over the run, relative to
    total variation).  At a 5-sigma utility spread the divergence is
    reported without a bound.
    """
    weak_lv = integrate(_regime_scenario(0.5, "lotka-volterra"))
    weak_rep = integrate(_regime_scenario(0.5, "replicator"))
    weak_shares = integrate(_regime_scenario(0.5, "shares-ode"))
    mean_rep, max_rep = _trajectory_gap(weak_rep, weak_lv)
    mean_sh, max_sh = _trajectory_gap(weak_shares, weak_lv)

    strong_lv = integrate(_regime_scenario(5.0, "lotka-volterra"))
    strong_rep = integrate(_regime_scenario(5.0, "replicator"))
    mean_strong, max_strong = _trajectory_gap(strong_rep, strong_lv)

    return [
        _check("replicator vs lotka-volterra, weak regime (mean L1 / TV)", mean_rep, 0.05),
        _check("shares-ode vs lotka-volterra, weak regime (mean L1 / TV)", mean_sh, 0.05),
        _info("replicator vs lotka-volterra, weak regime (max L1 / TV)", max_rep),
        _info("shares-ode vs lotka-volterra, weak regime (max L1 / TV)", max_sh),
        _info("replicator vs lotka-volterra, 5-sigma spread (mean L1 / TV)", mean_strong,
              "outside the validity regime; divergence reported, not bounded"),
        _info("replicator vs lotka-volterra, 5-sigma spread (max L1 / TV)", max_strong),
    ]
