"""choicedyn: non-equilibrium discrete-choice dynamics.

Equilibrium logit baselines, share-weighted interacting preferences,
replicator / Lotka-Volterra diffusion dynamics, aggregate welfare calculus,
innovation injection, and a scenario engine with CSV persistence.
"""

from .ces import CesProblem, ces_demand_oracle, ces_utility, mnl_from_prices
from .dynamics import (
    SHARE_FLOOR,
    Market,
    RateAggregates,
    SelfConsistencyResult,
    interacting_preferences,
    lotka_volterra_rhs,
    rate_aggregates,
    replicator_rhs,
    self_consistency_iterate,
    shares_rhs,
    substitution_matrix,
    validate_shares,
)
from .equilibrium import average_utility, binary_logit, entropy, mnl, representative_utility
from .errors import (
    ChoicedynError,
    ConfigError,
    ConvergenceError,
    DegenerateMarketError,
    DomainError,
    IntegrationError,
)
from .innovation import InnovationEvent, inject_product, prune, strong_path_dependence_experiment
from .scenario import (
    ENGINES,
    NoiseOff,
    NoiseOn,
    Scenario,
    TrajectoryLog,
    UtilityStep,
    integrate,
    parse_scenario,
    parse_scenario_text,
    serialize_scenario,
    shipped_scenario,
    write_scenario,
)
from .thermo import (
    AggregateState,
    LoopIntegralResult,
    NoiseSpec,
    Partials,
    aggregates,
    cross_derivative_check,
    loop_integral,
    partials,
    perturb,
)

__version__ = "0.1.0"
