"""Valuation, failure cascades, sensitivity and shock search in cross-holdings networks."""

from .cascade import (
    CascadeEquilibrium,
    best_case_equilibrium,
    check_equilibrium,
    enumerate_equilibria,
    worst_case_equilibrium,
)
from .errors import ConvergenceError, FormatError, InstanceTooLargeError, InvalidNetworkError
from .estimators import FailureTransformer, MarketValueTransformer
from .instances import RandomNetworkSpec, bank_run, random_network, single_edge_pair, two_bank_cycle
from .io import dumps, load, loads, store
from .network import (
    FinancialNetwork,
    Shock,
    ValuationResult,
    apply_shock,
    reserve,
    self_holdings,
    validate,
)
from .sensitivity import (
    PerturbationReport,
    acyclic_equity_bound_check,
    gen_lower_bound_network,
    is_acyclic,
    perturbation_report,
    sensitivity_upper_bound,
)
from .shock_search import (
    BipartiteGraph,
    ReductionParams,
    ShockSearchResult,
    bcbs_exact,
    gen_bcbs_reduction,
    max_failures_exact,
    max_failures_greedy,
    verify_reduction_gap,
)
from .valuation import (
    FlowSystem,
    SolverConfig,
    equity_values,
    flow_values,
    market_values,
    neumann_values,
)

__version__ = "0.1.0"
