"""Population-game dynamics on choice networks.

Simulate three mass-redistribution dynamics (pairwise density chasing,
neighborhood re-leveling, and simultaneous welfare-optimal reallocation),
prune the network down to the region the population can actually improve
into, partition it into payoff hills, and certify upper/lower bounds on
steady-state social utility from the initial state alone.
"""
from .allocation import AllocationProblem, AllocationResult, NonConvergence, solve_allocation
from .bounds import BoundsReport, TooLargeForExactEnumeration, compute_bounds
from .dynamics import (
    DYNAMICS,
    IntegrationDiverged,
    IntegratorConfig,
    Trajectory,
    nbrd_delta,
    nrpm_target,
    simulate,
    ssd_delta,
)
from .hills import (
    ComponentPartition,
    attractive_partition,
    is_qch,
    partition_violations,
    peel_components,
    qc_path_exists,
)
from .instances import (
    Instance,
    InstanceError,
    generate_instance,
    load_instance,
    load_scenario,
    save_instance,
    scenario_names,
)
from .kernels import BACKEND
from .model import (
    ChoiceGraph,
    FlowDigraph,
    NumericalFailure,
    PopulationState,
    QuadraticPayoffs,
    is_nash,
    social_utility,
)
from .reduction import ReducedGraph, eventually_empty_nodes, reduce_graph
from .waterfill import WaterfillResult, max_welfare, solve_waterfill

__version__ = "0.1.0"

__all__ = [
    "AllocationProblem",
    "AllocationResult",
    "NonConvergence",
    "solve_allocation",
    "BoundsReport",
    "TooLargeForExactEnumeration",
    "compute_bounds",
    "DYNAMICS",
    "IntegrationDiverged",
    "IntegratorConfig",
    "Trajectory",
    "nbrd_delta",
    "nrpm_target",
    "simulate",
    "ssd_delta",
    "ComponentPartition",
    "attractive_partition",
    "is_qch",
    "partition_violations",
    "peel_components",
    "qc_path_exists",
    "Instance",
    "InstanceError",
    "generate_instance",
    "load_instance",
    "load_scenario",
    "save_instance",
    "scenario_names",
    "BACKEND",
    "ChoiceGraph",
    "FlowDigraph",
    "NumericalFailure",
    "PopulationState",
    "QuadraticPayoffs",
    "is_nash",
    "social_utility",
    "ReducedGraph",
    "eventually_empty_nodes",
    "reduce_graph",
    "WaterfillResult",
    "max_welfare",
    "solve_waterfill",
]
