"""Product entry and exit, and the irreversibility they create.

New products enter with vanishingly small but non-zero shares, seeded
proportionally from every incumbent so the state moves by exactly 2*eps in
L1 and every aggregate shifts by O(eps).  Once an attractive entrant has
grown, removing the policy that accompanied it no longer restores the old
state: the product cannot be un-invented (strong path dependence).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import Market, validate_shares
from .errors import ConfigError, DegenerateMarketError, DomainError

__all__ = ["InnovationEvent", "inject_product", "prune", "strong_path_dependence_experiment", "StrongPathReport"]


@dataclass(frozen=True)
class InnovationEvent:
    """A new product arriving at ``time`` with its own utility and timescales."""

    time: float
    utility: float
    tau_new: float
    t_new: float
    seed_share: float = 1e-6
    label: str | None = None

    def __post_init__(self):
        if not (0.0 < self.seed_share < 1e-3):
            raise ConfigError(
                f"seed_share must lie in (0, 1e-3), got {self.seed_share!r}"
            )
        if self.tau_new <= 0.0 or self.t_new <= 0.0:
            raise ConfigError("innovation timescales must be > 0")
        if not np.isfinite(self.utility):
            raise ConfigError("innovation utility must be finite")


def inject_product(shares, m: Market, event: InnovationEvent, label: str | None = None):
    """Add the event's product at share eps, taken proportionally from incumbents.

    Returns the grown ``(shares, market)`` pair.  Incumbents are scaled by
    (1 - eps), so relative incumbent structure is preserved, the total stays
    1, and the L1 displacement is exactly 2*eps.
    """
    s = validate_shares(shares, m.n)
    eps = event.seed_share
    new_label = label if label is not None else event.label
    if new_label is None:
        new_label = str(m.n + 1)
    market = m.with_product(event.utility, event.tau_new, event.t_new, new_label)
    grown = np.append(s * (1.0 - eps), eps)
    return grown, market


def prune(shares, m: Market, floor: float = 1e-9):
    """Drop products whose share fell below ``floor`` and renormalise.

    Numerical hygiene for long runs: consumers forget products that have
    effectively left the market.  The removed mass is redistributed
    proportionally by the renormalisation.
    """
    if floor > 1e-9:
        raise DomainError(f"prune floor must be <= 1e-9, got {floor!r}")
    s = validate_shares(shares, m.n)
    keep = s >= floor
    if keep.all():
        return s.copy(), m
    if not keep.any():
        raise DegenerateMarketError("pruning removed every product")
    kept = s[keep]
    return kept / kept.sum(), m.restrict(keep)


@dataclass(frozen=True)
class StrongPathReport:
    """Loop residuals with and without a mid-loop innovation."""

    residual_without: float
    residual_with: float
    ratio: float
    u_bar_start: float
    u_bar_end_with: float
    entrant_final_share: float


def strong_path_dependence_experiment(base, event: InnovationEvent) -> StrongPathReport:
    """Run a closed policy loop twice: clean, and with an innovation mid-loop.

    ``base`` must be a scenario whose utility-step events cancel out (the
    policy is applied and later withdrawn), so the clean run is a closed
    loop and its |U_rep(end) - U_rep(start)| residual is the reversibility
    baseline.  The second run injects ``event`` mid-loop; an attractive
    entrant keeps its share and leaves a finite residual behind.
    """
    from .scenario import Scenario, UtilityStep, integrate  # deferred: scenario imports this module

    if not isinstance(base, Scenario):
        raise ConfigError("base must be a Scenario")
    if event.label is None:
        taken = set(base.market.labels)
        k = base.market.n + 1
        while str(k) in taken:
            k += 1
        event = replace(event, label=str(k))

    net = dict(zip(base.market.labels, base.market.baseline_utilities))
    steps = [ev for ev in base.events if isinstance(ev, UtilityStep)]
    if not steps:
        raise ConfigError("base scenario has no utility-step events; nothing forms a loop")
    for ev in steps:
        net[ev.product] = ev.value
    start = dict(zip(base.market.labels, base.market.baseline_utilities))
    if any(abs(net[lab] - start[lab]) > 0.0 for lab in start):
        raise ConfigError("base scenario's utility steps do not return to the start (open loop)")
    if not (0.0 < event.time < base.t_end):
        raise ConfigError("innovation must arrive strictly inside the loop")

    clean = integrate(base)
    residual_without = abs(float(clean.u_bar[-1] - clean.u_bar[0]))

    with_event = Scenario(
        market=base.market,
        initial_shares=base.initial_shares,
        t_end=base.t_end,
        dt=base.dt,
        engine=base.engine,
        seed=base.seed,
        events=tuple(sorted(base.events + (event,), key=lambda e: e.time)),
    )
    rich = integrate(with_event)
    residual_with = abs(float(rich.u_bar[-1] - rich.u_bar[0]))
    entrant_col = rich.labels.index(event.label)
    tiny = np.finfo(float).tiny
    return StrongPathReport(
        residual_without=residual_without,
        residual_with=residual_with,
        ratio=residual_with / max(residual_without, tiny),
        u_bar_start=float(rich.u_bar[0]),
        u_bar_end_with=float(rich.u_bar[-1]),
        entrant_final_share=float(rich.shares[-1, entrant_col]),
    )
