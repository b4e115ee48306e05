"""Share-weighted choice dynamics out of equilibrium.

Agents learn about products from peers, so each option's weight in the
choice probabilities carries its current market share S_i raised to the
interaction exponent alpha/sigma:

    P_i = S_i^(alpha/sigma) exp(U_i/sigma) / sum_k S_k^(alpha/sigma) exp(U_k/sigma)

Shares chase preferences with consumption/acquisition lags, giving three
equivalent-in-spirit right-hand sides for dS/dt (single-timescale
relaxation, two-timescale adoption/scrapping, pairwise share exchange).
All three conserve sum(S) exactly and leave simplex vertices fixed when
alpha > 0.

State vectors may carry leading batch axes: every function treats the last
axis as the product axis, so a (m, n) array integrates m markets at once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .equilibrium import as_utilities, check_sigma, mnl
from .errors import DegenerateMarketError, DomainError

__all__ = [
    "SHARE_FLOOR",
    "Market",
    "RateAggregates",
    "SelfConsistencyResult",
    "validate_shares",
    "interacting_preferences",
    "rate_aggregates",
    "shares_rhs",
    "replicator_rhs",
    "substitution_matrix",
    "lotka_volterra_rhs",
    "self_consistency_iterate",
]

# Applied only inside logs, powers and divisions; stored shares may be 0 so
# that vertices remain exact fixed points.
SHARE_FLOOR = 1e-12


def _positive_times(values, name: str, n: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (n,):
        raise DomainError(f"{name} must have one entry per product")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be finite and > 0")
    return arr


@dataclass(frozen=True)
class Market:
    """Immutable product list with per-product utilities and timescales.

    baseline_utilities -- mean utility U_i of each product
    tau                -- consumption/scrapping timescale per product
    t_acq              -- acquisition timescale per product (defaults to tau)
    sigma              -- preference diversity of the population, > 0
    alpha              -- peer-interaction strength in utility units, >= 0
    labels             -- stable product identifiers (default "1".."n")
    """

    baseline_utilities: np.ndarray
    tau: np.ndarray
    t_acq: np.ndarray | None = None
    sigma: float = 1.0
    alpha: float = 0.0
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        u = as_utilities(self.baseline_utilities).copy()
        n = u.size
        tau = _positive_times(self.tau, "tau", n)
        t_acq = tau.copy() if self.t_acq is None else _positive_times(self.t_acq, "t_acq", n)
        check_sigma(self.sigma)
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i + 1) for i in range(n))
        else:
            labels = tuple(str(lab) for lab in labels)
            if len(labels) != n or len(set(labels)) != n:
                raise DomainError("labels must be unique and match the product count")
        for arr in (u, tau, t_acq):
            arr.setflags(write=False)
        object.__setattr__(self, "baseline_utilities", u)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "t_acq", t_acq)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.baseline_utilities.size

    def replace_utilities(self, utilities) -> "Market":
        return replace(self, baseline_utilities=np.array(utilities, dtype=float))

    def set_utility(self, index: int, value: float) -> "Market":
        u = self.baseline_utilities.copy()
        u[index] = value
        return self.replace_utilities(u)

    def with_product(self, utility: float, tau: float, t_acq: float, label: str) -> "Market":
        return Market(
            baseline_utilities=np.append(self.baseline_utilities, utility),
            tau=np.append(self.tau, tau),
            t_acq=np.append(self.t_acq, t_acq),
            sigma=self.sigma,
            alpha=self.alpha,
            labels=self.labels + (str(label),),
        )

    def restrict(self, keep_mask) -> "Market":
        keep = np.asarray(keep_mask, dtype=bool)
        if keep.shape != (self.n,):
            raise DomainError("keep mask must have one entry per product")
        if not keep.any():
            raise DegenerateMarketError("cannot remove every product from a market")
        labels = tuple(lab for lab, k in zip(self.labels, keep) if k)
        return Market(
            baseline_utilities=self.baseline_utilities[keep],
            tau=self.tau[keep],
            t_acq=self.t_acq[keep],
            sigma=self.sigma,
            alpha=self.alpha,
            labels=labels,
        )


@dataclass(frozen=True)
class RateAggregates:
    """State-dependent harmonic-mean timescales of the current market.

    tau_bar   -- 1/tau_bar = sum_i S_i / tau_i   (share-weighted lifetime)
    tau_tilde -- 1/tau_tilde = sum_i P_i / tau_i (preference-weighted)
    t_bar     -- 1/t_bar = sum_i S_i / t_acq_i   (share-weighted acquisition)
    """

    tau_bar: float | np.ndarray
    tau_tilde: float | np.ndarray
    t_bar: float | np.ndarray


def validate_shares(shares, n: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Check a share vector: finite, >= 0, summing to 1 within ``tol``."""
    s = np.asarray(shares, dtype=float)
    if s.ndim < 1 or s.shape[-1] == 0:
        raise DomainError("shares must have at least one product entry")
    if n is not None and s.shape[-1] != n:
        raise DomainError(f"expected {n} share entries, got {s.shape[-1]}")
    if not np.all(np.isfinite(s)):
        raise DomainError("shares must be finite")
    if np.any(s < -tol):
        raise DomainError("shares must be non-negative")
    if np.any(np.abs(s.sum(axis=-1) - 1.0) > tol):
        raise DomainError("shares must sum to 1")
    return s


def _check_state(shares, m: Market) -> np.ndarray:
    s = np.asarray(shares, dtype=float)
    if s.shape[-1] != m.n:
        raise DomainError(f"expected {m.n} share entries, got {s.shape[-1]}")
    if not np.all(np.isfinite(s)):
        raise DomainError("shares must be finite")
    if np.any(s < -1e-9):
        raise DomainError("shares must be non-negative")
    return s


def interacting_preferences(shares, m: Market) -> np.ndarray:
    """Instantaneous choice probabilities given current product-use shares.

    Options are weighted by popularity: w_i = S_i^(alpha/sigma) e^(U_i/sigma).
    A product nobody uses has weight 0 when alpha > 0 (agents cannot choose
    what they have never seen); with alpha = 0 the shares drop out and the
    result is the plain multinomial logit of the baseline utilities.
    """
    s = _check_state(shares, m)
    a = m.alpha / m.sigma
    if a == 0.0:
        p = mnl(m.baseline_utilities, m.sigma)
        return np.broadcast_to(p, s.shape).copy()
    with np.errstate(divide="ignore"):
        log_s = np.where(s > 0.0, np.log(np.maximum(s, SHARE_FLOOR)), -np.inf)
    log_w = a * log_s + m.baseline_utilities / m.sigma
    shift = log_w.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(shift)):
        raise DegenerateMarketError("all shares are zero; no product can be chosen")
    w = np.exp(log_w - shift)
    return w / w.sum(axis=-1, keepdims=True)


def rate_aggregates(shares, prefs, m: Market) -> RateAggregates:
    """Harmonic-mean timescales recomputed from the current (S, P) state."""
    s = np.asarray(shares, dtype=float)
    p = np.asarray(prefs, dtype=float)
    out_rate = (s / m.tau).sum(axis=-1)
    in_rate = (p / m.tau).sum(axis=-1)
    acq_rate = (s / m.t_acq).sum(axis=-1)
    if np.any(out_rate <= 0.0) or np.any(in_rate <= 0.0) or np.any(acq_rate <= 0.0):
        raise DegenerateMarketError("rate aggregates require some non-zero share")
    return RateAggregates(tau_bar=1.0 / out_rate, tau_tilde=1.0 / in_rate, t_bar=1.0 / acq_rate)


def shares_rhs(shares, m: Market) -> np.ndarray:
    """dS/dt for single-timescale relaxation of shares toward preferences.

    Inflow kappa * P_i / tau_i, outflow S_i / tau_i, with
    kappa = (sum_k S_k/tau_k) / (sum_k P_k/tau_k) so that total adoption
    equals total scrapping and sum(dS/dt) = 0 identically.
    """
    s = _check_state(shares, m)
    p = interacting_preferences(s, m)
    inv_tau = 1.0 / m.tau
    out_rate = (s * inv_tau).sum(axis=-1, keepdims=True)
    in_rate = (p * inv_tau).sum(axis=-1, keepdims=True)
    kappa = out_rate / in_rate
    return kappa * p * inv_tau - s * inv_tau


def replicator_rhs(shares, m: Market) -> np.ndarray:
    """dS/dt for durable products with separate acquisition and scrapping.

    Adoption arrives at the acquisition rate 1/t_acq_i weighted by the
    preferences, scrapping leaves at the lifetime rate 1/tau_i; the inflow
    normalisation again enforces exact conservation.  Equivalent to the
    fitness form dS_i/dt = S_i (f_i - fbar) with the share-weighted mean
    fitness fbar = 0 by construction, and identical to ``shares_rhs`` when
    t_acq = tau.
    """
    s = _check_state(shares, m)
    p = interacting_preferences(s, m)
    inv_t = 1.0 / m.t_acq
    out_rate = (s / m.tau).sum(axis=-1, keepdims=True)
    in_rate = (p * inv_t).sum(axis=-1, keepdims=True)
    kappa = out_rate / in_rate
    return kappa * p * inv_t - s / m.tau


def substitution_matrix(shares, m: Market) -> np.ndarray:
    """Pairwise substitution rates A_ij = (t_bar/t_acq_i) * (tau_bar/tau_j).

    t_bar and tau_bar are the share-weighted harmonic means, so the matrix
    is state-dependent; it degenerates to all ones for homogeneous
    timescales.
    """
    s = _check_state(shares, m)
    if s.ndim != 1:
        raise DomainError("substitution_matrix expects a single share vector")
    agg = rate_aggregates(s, interacting_preferences(s, m), m)
    return np.outer(agg.t_bar / m.t_acq, agg.tau_bar / m.tau)


def _pairwise_logistic(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lotka_volterra_rhs(shares, m: Market) -> np.ndarray:
    """dS/dt as pairwise share exchange between product pairs.

    dS_i/dt = (1/tau_bar) sum_j S_i^a S_j^a (A_ij F_ij - A_ji F_ji),
    a = alpha/sigma, with the binary pairwise preference
    F_ij = e^(d)/(e^(d) + e^(-d)), d = (U_i - U_j)/sigma, so F_ij + F_ji = 1
    and F_ij grows with product i's utility edge.  The i<->j antisymmetry
    of each pair flow makes conservation exact.
    """
    s = _check_state(shares, m)
    a = m.alpha / m.sigma
    if a == 0.0:
        w = np.ones_like(s)
    else:
        w = np.where(s > 0.0, np.maximum(s, SHARE_FLOOR) ** a, 0.0)
    d = (m.baseline_utilities[:, None] - m.baseline_utilities[None, :]) / m.sigma
    f = _pairwise_logistic(2.0 * d)
    out_rate = (s / m.tau).sum(axis=-1)  # = 1/tau_bar
    acq_rate = (s / m.t_acq).sum(axis=-1)  # = 1/t_bar
    if np.any(out_rate <= 0.0):
        raise DegenerateMarketError("all shares are zero; no product can be chosen")
    t_bar = 1.0 / acq_rate
    tau_bar = 1.0 / out_rate
    subs = (t_bar[..., None] / m.t_acq)[..., :, None] * (tau_bar[..., None] / m.tau)[..., None, :]
    g = subs * f
    flows = w[..., :, None] * w[..., None, :] * (g - np.swapaxes(g, -1, -2))
    return flows.sum(axis=-1) * out_rate[..., None]


@dataclass(frozen=True)
class SelfConsistencyResult:
    """Outcome of iterating S <- P(S) to a fixed point."""

    shares: np.ndarray
    iterations: int
    converged: bool
    reached_vertex: bool
    residual: float


def self_consistency_iterate(
    m: Market, shares0, max_iter: int = 100_000, tol: float = 1e-13
) -> SelfConsistencyResult:
    """Search for a state where shares equal preferences by plain iteration.

    With interactions (alpha > 0) and distinct utilities the only stable
    fixed points are simplex vertices, so interior starts drift to a corner;
    with equal utilities every state is already fixed.  Non-convergence
    within ``max_iter`` is reported, not raised.
    """
    s = validate_shares(shares0, m.n)
    if s.ndim != 1:
        raise DomainError("self_consistency_iterate expects a single share vector")
    s = s.astype(float).copy()
    residual = np.inf
    for k in range(max_iter):
        p = interacting_preferences(s, m)
        residual = float(np.abs(p - s).max())
        if residual <= tol:
            return SelfConsistencyResult(
                shares=s,
                iterations=k,
                converged=True,
                reached_vertex=bool(s.max() > 1.0 - 1e-6),
                residual=residual,
            )
        s = p
    return SelfConsistencyResult(
        shares=s,
        iterations=max_iter,
        converged=False,
        reached_vertex=bool(s.max() > 1.0 - 1e-6),
        residual=residual,
    )
