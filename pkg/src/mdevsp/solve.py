"""Solve orchestration: formulation choice, cut loop, schedule extraction.

The portable driver re-solves the 2-index base model after each round of
cut separation; this keeps exactness with any backend (both cut families
are finite and every round eliminates the current optimum).  Node counts
and timings are therefore not comparable across backends.  The 3-index
model is a single direct solve.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .backend import SolveStatus, get_backend
from .formulations import (
    FormulationHandle,
    ObjectiveTriple,
    build_three_index,
    build_two_index_base,
    scalarize,
)
from .graph import (
    DestinationNode,
    FullChargeNode,
    OriginNode,
    PartialChargeNode,
    SchedulingGraph,
    TripNode,
    build_graph,
    is_charging,
)
from .model import Instance, load_instance
from .separation import (
    CandidatePoint,
    StructuralError,
    select_cuts,
    separate_connectivity,
    separate_infeasible_paths_fractional,
    separate_infeasible_paths_integer,
    trace_integer_paths,
)

FORMULATIONS = ("3i", "2i-ip", "2i-cc")
SEP_MODES = ("i", "if")
ADD_MODES = ("one", "all")

MAX_FRACTIONAL_ROUNDS = 20
_SNAP_TOL = 1e-4


@dataclass(frozen=True)
class SolveConfig:
    formulation: str = "2i-cc"
    sep_mode: str = "i"
    add_mode: str = "all"
    vi: bool = True
    time_limit: float = 600.0
    seed: int = 0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.sep_mode not in SEP_MODES:
            raise ValueError(f"sep_mode must be one of {SEP_MODES}")
        if self.add_mode not in ADD_MODES:
            raise ValueError(f"add_mode must be one of {ADD_MODES}")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    @property
    def setting_name(self) -> str:
        """Human-readable setting string, e.g. ``2i-CC+VI+I+All``."""
        if self.formulation == "3i":
            return "3i+VI" if self.vi else "3i"
        base = "2i-IP" if self.formulation == "2i-ip" else "2i-CC"
        parts = [base]
        if self.vi:
            parts.append("VI")
        parts.append(self.sep_mode.upper())
        parts.append(self.add_mode.capitalize())
        return "+".join(parts)


@dataclass
class VehicleSchedule:
    depot: int
    nodes: list
    soc: list[float]
    charge_amounts: dict[int, float] = field(default_factory=dict)

    def to_elements(self):
        elements = []
        for pos, node in enumerate(self.nodes):
            if isinstance(node, OriginNode):
                elements.append(("origin", node.depot))
            elif isinstance(node, DestinationNode):
                elements.append(("dest", node.depot))
            elif isinstance(node, TripNode):
                elements.append(("trip", node.trip))
            else:
                elements.append(("charge", node.station, self.charge_amounts.get(pos, 0.0)))
        return elements

    def to_json_dict(self):
        return {
            "depot": self.depot,
            "elements": [list(e) for e in self.to_elements()],
            "soc": list(self.soc),
        }


@dataclass
class SolveStats:
    rounds: int = 0
    cuts_added: int = 0
    cut_time: float = 0.0
    solve_time: float = 0.0
    fractional_rounds: int = 0
    fractional_cuts: int = 0
    root_bound: float | None = None
    round_objectives: list[float] = field(default_factory=list)
    cut_log: list[str] = field(default_factory=list)

    def to_json_dict(self):
        return asdict(self)


@dataclass
class Solution:
    status: SolveStatus
    objective: ObjectiveTriple | None
    bound: float | None
    schedules: list[VehicleSchedule]
    stats: SolveStats
    config: SolveConfig

    @property
    def scalar_objective(self) -> float | None:
        return None if self.objective is None else scalarize(self.objective, self._weights)

    def attach_weights(self, weights):
        self._weights = tuple(weights)
        return self

    def gap_percent(self) -> float:
        """(incumbent - bound) / incumbent on the scalarized objective, in percent."""
        if self.status == SolveStatus.OPTIMAL:
            return 0.0
        inc = self.scalar_objective
        if inc is None or self.bound is None or inc == 0:
            return 100.0
        return max(100.0 * (inc - self.bound) / abs(inc), 0.0)

    def to_json_dict(self):
        return {
            "config": asdict(self.config),
            "setting": self.config.setting_name,
            "status": self.status.value,
            "objective": None
            if self.objective is None
            else {
                "n_vehicles": self.objective.n_vehicles,
                "n_charges": self.objective.n_charges,
                "deadhead_energy": self.objective.deadhead_energy,
            },
            "scalar_objective": self.scalar_objective,
            "bound": self.bound,
            "gap_pct": self.gap_percent(),
            "stats": self.stats.to_json_dict(),
            "schedules": [s.to_json_dict() for s in self.schedules],
        }


def _snap_integral(arc_values: dict) -> dict:
    out = {}
    for arc, v in arc_values.items():
        r = round(v)
        out[arc] = float(r) if abs(v - r) <= _SNAP_TOL else v
    return out


def _separate_integer(handle: FormulationHandle, candidate: CandidatePoint, config: SolveConfig):
    """One round of integer separation; returns the cuts to add."""
    graph = handle.graph
    if config.formulation == "2i-ip":
        cuts = separate_infeasible_paths_integer(graph, candidate)
        return select_cuts(cuts, config.add_mode)
    paths = trace_integer_paths(graph, candidate)
    depots = sorted({p[0].depot for p in paths})
    cuts = []
    for k in depots:
        cut = separate_connectivity(graph, candidate, k)
        if cut is not None:
            cuts.append(cut)
            if config.add_mode == "one":
                break
    return cuts


def _separate_fractional(handle: FormulationHandle, candidate: CandidatePoint, config: SolveConfig):
    graph = handle.graph
    if config.formulation == "2i-ip":
        cuts = separate_infeasible_paths_fractional(graph, candidate)
        return select_cuts(cuts, config.add_mode)
    cuts = []
    for dp in handle.instance.depots:
        cut = separate_connectivity(graph, candidate, dp.index)
        if cut is not None:
            cuts.append(cut)
            if config.add_mode == "one":
                break
    return cuts


def _add_cuts(handle: FormulationHandle, cuts, stats: SolveStats, candidate, fractional=False):
    for cut in cuts:
        if hasattr(cut, "members"):
            handle.add_connectivity_cut(cut)
            violation = cut.violation(handle.graph, candidate)
        else:
            handle.add_infeasible_path_cut(cut)
            violation = cut.violation(candidate)
        stats.cuts_added += 1
        if fractional:
            stats.fractional_cuts += 1
        stats.cut_log.append(f"{cut.describe()} violation={violation:.6g}")


def solve(instance: Instance, config: SolveConfig, backend=None) -> Solution:
    """Build the configured formulation, run the cut loop, extract schedules."""
    backend = backend or get_backend()
    graph = build_graph(instance)
    deadline = time.perf_counter() + config.time_limit

    def remaining():
        return max(deadline - time.perf_counter(), 0.01)

    if config.formulation == "3i":
        handle = build_three_index(graph, instance, config.vi, backend)
    else:
        handle = build_two_index_base(graph, instance, config.vi, backend)

    stats = SolveStats()
    root = handle.model.solve(time_limit=remaining(), relax=True)
    stats.solve_time += root.wall_time
    if root.status == SolveStatus.OPTIMAL:
        stats.root_bound = root.objective

    if config.formulation != "3i" and config.sep_mode == "if":
        for _ in range(MAX_FRACTIONAL_ROUNDS):
            res = handle.model.solve(time_limit=remaining(), relax=True)
            stats.solve_time += res.wall_time
            if res.status != SolveStatus.OPTIMAL:
                break
            stats.fractional_rounds += 1
            candidate = CandidatePoint.from_arc_values(handle.arc_values(res.values))
            t0 = time.perf_counter()
            cuts = _separate_fractional(handle, candidate, config)
            stats.cut_time += time.perf_counter() - t0
            if not cuts:
                break
            _add_cuts(handle, cuts, stats, candidate, fractional=True)

    status = SolveStatus.ERROR
    final_result = None
    while True:
        res = handle.model.solve(time_limit=remaining())
        stats.solve_time += res.wall_time
        final_result = res
        if res.status == SolveStatus.INFEASIBLE:
            status = SolveStatus.INFEASIBLE
            break
        if res.status not in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE):
            status = res.status
            break
        stats.rounds += 1
        stats.round_objectives.append(res.objective)
        if config.formulation == "3i":
            status = res.status
            break
        candidate = CandidatePoint.from_arc_values(_snap_integral(handle.arc_values(res.values)))
        t0 = time.perf_counter()
        cuts = _separate_integer(handle, candidate, config)
        stats.cut_time += time.perf_counter() - t0
        if not cuts:
            status = res.status  # optimal, or a separation-clean incumbent at the limit
            break
        if res.status == SolveStatus.FEASIBLE:
            # limit hit and the incumbent still violates depot pairing
            status = SolveStatus.TIME_LIMIT
            break
        _add_cuts(handle, cuts, stats, candidate)

    objective = None
    schedules: list[VehicleSchedule] = []
    bound = final_result.best_bound if final_result is not None else None
    if status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE) and final_result.values is not None:
        arc_values = _snap_integral(handle.arc_values(final_result.values))
        objective = handle.objective_triple(arc_values)
        eps_values = handle.eps_values(final_result.values)
        schedules = extract_schedules(graph, arc_values, eps_values)
    solution = Solution(status, objective, bound, schedules, stats, config)
    return solution.attach_weights(instance.weights)


def extract_schedules(graph: SchedulingGraph, arc_values: dict, eps_values: dict) -> list[VehicleSchedule]:
    """Decompose integral arc values into per-vehicle node paths.

    Charge amounts target the departure level chosen by the energy
    variables, evaluated against the true simulated arrival level (the
    energy rows are one-sided, so raw variable values may sag below the
    physically attained charge) and clamped into window and capacity.
    """
    params = graph.instance.params
    active = {arc for arc, v in arc_values.items() if v > 0.5}
    succ: dict = {}
    for tail, head in active:
        succ.setdefault(tail, []).append(head)
    schedules = []
    walked = 0
    for node in graph.nodes:
        if not isinstance(node, OriginNode):
            continue
        for first in succ.get(node, []):
            nodes = [node, first]
            walked += 1
            current = first
            while not isinstance(current, DestinationNode):
                heads = succ.get(current, [])
                if len(heads) != 1:
                    raise StructuralError(
                        f"arc set not decomposable: {current.label} has {len(heads)} active successors"
                    )
                current = heads[0]
                nodes.append(current)
                walked += 1
                if len(nodes) > graph.n_nodes + 1:
                    raise StructuralError("arc set not decomposable: walk exceeded node count")
            if current.depot != node.depot:
                raise StructuralError(
                    f"depot-mismatched path o{node.depot} -> d{current.depot} in extraction"
                )
            soc = [params.s_max]
            charge_amounts = {}
            trips_by_id = {tr.id: tr for tr in graph.instance.trips}
            for pos in range(1, len(nodes)):
                prev, n = nodes[pos - 1], nodes[pos]
                arrival = soc[pos - 1] - graph.arc_energy[(prev, n)]
                if isinstance(n, TripNode):
                    soc.append(arrival - trips_by_id[n.trip].energy)
                elif is_charging(n):
                    _, h_c = graph.charge_window(n)
                    target = eps_values.get(n, arrival)
                    amount = min(max(target - arrival, 0.0), h_c, params.s_max - arrival)
                    charge_amounts[pos] = amount
                    soc.append(arrival + amount)
                else:
                    soc.append(arrival)
            schedules.append(VehicleSchedule(node.depot, nodes, soc, charge_amounts))
    if walked != len(active):
        raise StructuralError(f"arc set not decomposable: {len(active) - walked} arcs unused")
    return schedules


# -- batch runner -------------------------------------------------------------

CSV_COLUMNS = [
    "instance",
    "model",
    "sep",
    "cuts",
    "vi",
    "status",
    "time_s",
    "gap_pct",
    "n_buses",
    "n_charges",
    "deadhead_energy",
    "root_bound",
    "best_bound",
    "n_cuts",
    "t_cut_s",
]


def _result_row(name: str, config: SolveConfig, solution: Solution, elapsed: float) -> dict:
    obj = solution.objective
    return {
        "instance": name,
        "model": config.formulation,
        "sep": config.sep_mode,
        "cuts": config.add_mode,
        "vi": int(config.vi),
        "status": solution.status.value,
        "time_s": f"{elapsed:.3f}",
        "gap_pct": f"{solution.gap_percent():.2f}",
        "n_buses": "" if obj is None else obj.n_vehicles,
        "n_charges": "" if obj is None else obj.n_charges,
        "deadhead_energy": "" if obj is None else f"{obj.deadhead_energy:.6f}",
        "root_bound": "" if solution.stats.root_bound is None else f"{solution.stats.root_bound:.6f}",
        "best_bound": "" if solution.bound is None else f"{solution.bound:.6f}",
        "n_cuts": solution.stats.cuts_added,
        "t_cut_s": f"{solution.stats.cut_time:.3f}",
    }


def _bench_job(job):
    path, config_dict = job
    config = SolveConfig(**config_dict)
    name = Path(path).name
    try:
        instance = load_instance(path)
        start = time.perf_counter()
        solution = solve(instance, config)
        elapsed = time.perf_counter() - start
        return _result_row(name, config, solution, elapsed)
    except Exception as exc:  # recorded per-row, the run continues
        row = {col: "" for col in CSV_COLUMNS}
        row.update(
            {
                "instance": name,
                "model": config.formulation,
                "sep": config.sep_mode,
                "cuts": config.add_mode,
                "vi": int(config.vi),
                "status": f"error: {exc}",
            }
        )
        return row


def run_benchmark(instance_paths, configs, out_path, workers: int = 1) -> list[dict]:
    """Solve every instance under every config; write a CSV, return the rows."""
    jobs = [(str(path), asdict(config)) for path in instance_paths for config in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_job, jobs))
    else:
        rows = [_bench_job(job) for job in jobs]
    out_path = Path(out_path)
    with out_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def write_report(solution: Solution, path):
    Path(path).write_text(json.dumps(solution.to_json_dict(), indent=1))


def load_solution_elements(path):
    """Read back the schedules of a solution report as element sequences."""
    doc = json.loads(Path(path).read_text())
    schedules = []
    for rec in doc.get("schedules", []):
        schedules.append([tuple(e) for e in rec["elements"]])
    return schedules
