"""Exact solver toolkit for multi-depot electric vehicle scheduling with partial recharging."""

from .backend import SolveStatus, get_backend
from .formulations import (
    ObjectiveTriple,
    build_three_index,
    build_two_index_base,
    descalarize,
    scalarize,
    triples_equal,
)
from .generate import (
    BenchmarkSpec,
    apply_scenario,
    combine_instances,
    generate_benchmark,
    generate_realistic_base,
)
from .graph import SchedulingGraph, build_graph
from .model import (
    ChargingStation,
    Depot,
    Instance,
    Location,
    ServiceTrip,
    VehicleParams,
    fleet_lower_bound,
    instance_from_locations,
    load_instance,
    save_instance,
)
from .solve import SolveConfig, Solution, run_benchmark, solve
from .validate import ValidationReport, brute_force_optimum, feasible_exists, validate

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec",
    "ChargingStation",
    "Depot",
    "Instance",
    "Location",
    "ObjectiveTriple",
    "SchedulingGraph",
    "ServiceTrip",
    "SolveConfig",
    "SolveStatus",
    "Solution",
    "ValidationReport",
    "VehicleParams",
    "apply_scenario",
    "brute_force_optimum",
    "build_graph",
    "build_three_index",
    "build_two_index_base",
    "combine_instances",
    "descalarize",
    "feasible_exists",
    "fleet_lower_bound",
    "generate_benchmark",
    "generate_realistic_base",
    "get_backend",
    "instance_from_locations",
    "load_instance",
    "run_benchmark",
    "save_instance",
    "scalarize",
    "solve",
    "triples_equal",
    "validate",
]
