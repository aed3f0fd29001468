"""Stochastic vehicle routing toolkit: generation, planning, evaluation."""

from .core import (
    Customer,
    FleetSpec,
    Instance,
    InvariantError,
    Location,
    Route,
    SchemaError,
    Solution,
    StochasticParams,
    SvrpError,
    TimeWindow,
    TimeWindowParams,
    euclidean_distance,
)
from .evaluation import (
    MetricsReport,
    RealizationResult,
    cvr,
    evaluate_solution,
    feasibility_rate,
    realize_cost,
    robustness,
    run_benchmark,
)
from .generator import (
    GeneratorConfig,
    generate_instance,
    tier_config,
    validate_instance,
)
from .solvers import (
    AcoParams,
    PlanningMatrix,
    SOLVERS,
    TabuParams,
    aco_solve,
    build_planning_matrix,
    external_solve,
    nearest_neighbor_construct,
    penalized_cost,
    planned_cost,
    tabu_search,
    two_opt_improve,
)
from .stochastic import (
    RandomStream,
    TravelSample,
    expected_travel_time,
    sample_time_window,
    travel_time,
)

__version__ = "0.1.0"

__all__ = [
    "AcoParams", "Customer", "FleetSpec", "GeneratorConfig", "Instance",
    "InvariantError", "Location", "MetricsReport", "PlanningMatrix",
    "RandomStream", "RealizationResult", "Route", "SOLVERS", "SchemaError",
    "Solution", "StochasticParams", "SvrpError", "TabuParams", "TimeWindow",
    "TimeWindowParams", "TravelSample", "aco_solve", "build_planning_matrix",
    "cvr", "euclidean_distance", "evaluate_solution", "expected_travel_time",
    "external_solve", "feasibility_rate", "generate_instance",
    "nearest_neighbor_construct", "penalized_cost", "planned_cost",
    "realize_cost", "robustness", "run_benchmark", "sample_time_window",
    "tabu_search", "tier_config", "travel_time", "two_opt_improve",
    "validate_instance",
]
