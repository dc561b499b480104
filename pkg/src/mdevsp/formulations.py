"""MILP formulations over the scheduling graph.

Two models are built on an abstract backend: a 3-index multi-commodity
flow model (one binary per depot and arc) and a 2-index base model (one
binary per arc) that omits the exponential depot-pairing families; those
are supplied later as cuts.  Big-M rows are emitted in the exact algebraic
arrangement used throughout (``eps_j <= eps_i - (p+q) x + M (1-x)``) so LP
exports are directly auditable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .backend import HighsModel
from .graph import (
    DestinationNode,
    FullChargeNode,
    OriginNode,
    SchedulingGraph,
    TripNode,
    is_charging,
)
from .model import Instance, fleet_lower_bound


class BuildError(RuntimeError):
    """Backend failure while emitting a constraint family."""

    def __init__(self, family: str, cause: Exception):
        self.family = family
        super().__init__(f"failed to build constraint family '{family}': {cause}")


class TierBleedWarning(UserWarning):
    """Objective weights cannot guarantee lexicographic tier separation."""


@dataclass(frozen=True)
class ObjectiveTriple:
    """Lexicographic objective value: vehicles, charging visits, deadhead energy."""

    n_vehicles: int
    n_charges: int
    deadhead_energy: float

    def scalarized(self, weights) -> float:
        return scalarize(self, weights)


def scalarize(triple: ObjectiveTriple, weights) -> float:
    w1, w2, w3 = weights
    return w1 * triple.n_vehicles + w2 * triple.n_charges + w3 * triple.deadhead_energy


def descalarize(value: float, weights) -> ObjectiveTriple:
    """Recover the triple from a scalar objective by tiered integer division.

    Valid only while the tier-separation precondition holds (see
    :func:`check_tier_separation`).
    """
    w1, w2, w3 = weights
    n_vehicles = int(math.floor(value / w1 + 1e-9))
    rest = value - n_vehicles * w1
    n_charges = int(math.floor(rest / w2 + 1e-9))
    deadhead = (rest - n_charges * w2) / w3
    return ObjectiveTriple(n_vehicles, n_charges, max(deadhead, 0.0))


def triples_equal(a: ObjectiveTriple, b: ObjectiveTriple, rel_tol: float = 1e-6) -> bool:
    return (
        a.n_vehicles == b.n_vehicles
        and a.n_charges == b.n_charges
        and math.isclose(a.deadhead_energy, b.deadhead_energy, rel_tol=rel_tol, abs_tol=1e-6)
    )


def check_tier_separation(instance: Instance):
    """Warn when the weights cannot provably keep the objective tiers apart.

    Worst-case bounds: at most one charging visit per trip, and at most
    3 * |trips| arcs in any solution, each costing at most max(p).
    """
    w1, w2, w3 = instance.weights
    max_charges = instance.n_trips
    max_deadhead = 3 * instance.n_trips * float(instance.p.max())
    if w2 <= w3 * max_deadhead:
        warnings.warn(
            f"w2={w2} does not exceed w3 * bound(deadhead)={w3 * max_deadhead:.6g}; "
            "charging tier may bleed into the deadhead tier",
            TierBleedWarning,
            stacklevel=2,
        )
    if w1 <= w2 * max_charges:
        warnings.warn(
            f"w1={w1} does not exceed w2 * bound(charges)={w2 * max_charges:.6g}; "
            "vehicle tier may bleed into the charging tier",
            TierBleedWarning,
            stacklevel=2,
        )


@dataclass
class FormulationHandle:
    """A built model plus the variable maps needed to read it back."""

    kind: str  # "3i" | "2i"
    model: HighsModel
    graph: SchedulingGraph
    instance: Instance
    vi: bool
    x_vars: dict
    eps_vars: dict

    # -- reading solutions ------------------------------------------------

    def x_values(self, values) -> dict:
        return {key: float(values[ref]) for key, ref in self.x_vars.items()}

    def eps_values(self, values) -> dict:
        return {node: float(values[ref]) for node, ref in self.eps_vars.items()}

    def arc_values(self, values) -> dict:
        """Per-arc usage; sums the per-depot variables for the 3-index model."""
        out: dict = {}
        if self.kind == "3i":
            for (k, arc), ref in self.x_vars.items():
                out[arc] = out.get(arc, 0.0) + float(values[ref])
        else:
            for arc, ref in self.x_vars.items():
                out[arc] = float(values[ref])
        return out

    def objective_triple(self, arc_values: dict) -> ObjectiveTriple:
        n_vehicles = sum(v for (tail, _), v in arc_values.items() if isinstance(tail, OriginNode))
        n_charges = sum(v for (_, head), v in arc_values.items() if is_charging(head))
        deadhead = sum(self.graph.arc_energy[arc] * v for arc, v in arc_values.items())
        return ObjectiveTriple(int(round(n_vehicles)), int(round(n_charges)), deadhead)

    # -- cut rows -----------------------------------------------------------

    def add_infeasible_path_cut(self, cut):
        if self.kind != "2i":
            raise BuildError("infeasible-path", ValueError("cuts apply to the 2-index model"))
        coeffs = {}
        for arc in cut.arcs:
            ref = self.x_vars[arc]
            coeffs[ref] = coeffs.get(ref, 0.0) + 1.0
        self.model.add_le(coeffs, len(cut.arcs) - 1, name=f"ip_{cut.origin}_{cut.dest}_{self.model.num_rows}")

    def add_connectivity_cut(self, cut):
        if self.kind != "2i":
            raise BuildError("connectivity", ValueError("cuts apply to the 2-index model"))
        coeffs: dict[int, float] = {}
        members = cut.members
        for (tail, head), ref in self.x_vars.items():
            if tail in members and head not in members:
                coeffs[ref] = coeffs.get(ref, 0.0) + 1.0
        origin = OriginNode(cut.depot)
        for head in self.graph.successors[origin]:
            ref = self.x_vars[(origin, head)]
            coeffs[ref] = coeffs.get(ref, 0.0) - 1.0
        coeffs = {ref: c for ref, c in coeffs.items() if c != 0.0}
        self.model.add_ge(coeffs, 0.0, name=f"cc_{cut.depot}_{self.model.num_rows}")


def _family(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, BuildError):
                raise BuildError(name, exc) from exc
            return False

    return _Ctx()


def _eps_variables(model, graph, params):
    eps = {}
    for node in graph.nodes:
        if isinstance(node, OriginNode):
            lb = ub = params.s_max
        elif isinstance(node, DestinationNode):
            lb, ub = params.s_min_dep, params.s_max
        else:
            lb, ub = params.s_min, params.s_max
        eps[node] = model.add_continuous(f"eps_{node.label}", lb, ub)
    return eps


def _energy_rows(model, graph, instance, eps, x_of, commodities, big_m):
    """Emit the shared energy rows; ``x_of(k, arc)`` resolves the binary."""
    params = instance.params
    q = {tr.id: tr.energy for tr in instance.trips}
    with _family("eps-origin"):
        for dp in instance.depots:
            model.add_eq({eps[OriginNode(dp.index)]: 1.0}, params.s_max, name=f"eps_origin_{dp.index}")
    with _family("eps-floor"):
        for node in graph.nodes:
            if isinstance(node, (OriginNode, DestinationNode)):
                continue
            model.add_ge({eps[node]: 1.0}, params.s_min, name=f"eps_floor_{node.label}")
    with _family("eps-return"):
        for dp in instance.depots:
            model.add_ge({eps[DestinationNode(dp.index)]: 1.0}, params.s_min_dep, name=f"eps_return_{dp.index}")
    with _family("pre-departure-floor"):
        for node in graph.nodes:
            if not isinstance(node, TripNode):
                continue
            for k in commodities:
                coeffs = {eps[node]: 1.0}
                for head in graph.successors[node]:
                    ref = x_of(k, (node, head))
                    coeffs[ref] = coeffs.get(ref, 0.0) - graph.arc_energy[(node, head)]
                suffix = f"_k{k}" if k is not None else ""
                model.add_ge(coeffs, params.s_min, name=f"predep_{node.label}{suffix}")
    with _family("energy-propagation"):
        for (tail, head), p in graph.arc_energy.items():
            if isinstance(head, TripNode):
                drop = p + q[head.trip]
            elif is_charging(head):
                _, h_c = graph.charge_window(head)
                drop = p - h_c
            elif isinstance(head, DestinationNode):
                drop = p
            else:
                continue  # no arcs enter origins
            for k in commodities:
                suffix = f"_k{k}" if k is not None else ""
                model.add_le(
                    {eps[head]: 1.0, eps[tail]: -1.0, x_of(k, (tail, head)): drop + big_m},
                    big_m,
                    name=f"prop_{tail.label}_{head.label}{suffix}",
                )
    with _family("eps-cap"):
        for node in graph.nodes:
            if is_charging(node):
                model.add_le({eps[node]: 1.0}, params.s_max, name=f"eps_cap_{node.label}")


def build_three_index(graph: SchedulingGraph, instance: Instance, vi: bool, backend) -> FormulationHandle:
    """Multi-commodity flow model with one binary per depot and arc."""
    check_tier_separation(instance)
    model = backend.new_model("mdevsp-3i")
    params = instance.params
    w1, w2, w3 = instance.weights
    depot_ids = [dp.index for dp in instance.depots]
    arcs = list(graph.arcs())

    x = {}
    with _family("variables"):
        for k in depot_ids:
            for arc in arcs:
                tail, head = arc
                x[(k, arc)] = model.add_binary(f"x_{k}_{tail.label}_{head.label}")
        eps = _eps_variables(model, graph, params)

    objective = {}
    for (k, (tail, head)), ref in x.items():
        coef = w3 * graph.arc_energy[(tail, head)]
        if isinstance(tail, OriginNode) and tail.depot == k:
            coef += w1
        if is_charging(head):
            coef += w2
        objective[ref] = coef
    model.set_objective(objective)

    with _family("trip-cover"):
        for tr in instance.trips:
            node = TripNode(tr.id)
            coeffs = {}
            for k in depot_ids:
                for tail in graph.predecessors[node]:
                    coeffs[x[(k, (tail, node))]] = 1.0
            model.add_eq(coeffs, 1.0, name=f"cover_t{tr.id}")
    with _family("depot-capacity"):
        for dp in instance.depots:
            origin = OriginNode(dp.index)
            coeffs = {x[(dp.index, (origin, head))]: 1.0 for head in graph.successors[origin]}
            model.add_le(coeffs, dp.capacity, name=f"cap_o{dp.index}")
    with _family("flow-conservation"):
        for node in graph.nodes:
            if isinstance(node, (OriginNode, DestinationNode)):
                continue
            for k in depot_ids:
                coeffs = {}
                for tail in graph.predecessors[node]:
                    coeffs[x[(k, (tail, node))]] = coeffs.get(x[(k, (tail, node))], 0.0) + 1.0
                for head in graph.successors[node]:
                    coeffs[x[(k, (node, head))]] = coeffs.get(x[(k, (node, head))], 0.0) - 1.0
                model.add_eq(coeffs, 0.0, name=f"flow_{node.label}_k{k}")
    with _family("depot-pairing"):
        for dp in instance.depots:
            origin, dest = OriginNode(dp.index), DestinationNode(dp.index)
            coeffs = {x[(dp.index, (origin, head))]: 1.0 for head in graph.successors[origin]}
            for tail in graph.predecessors[dest]:
                ref = x[(dp.index, (tail, dest))]
                coeffs[ref] = coeffs.get(ref, 0.0) - 1.0
            model.add_eq(coeffs, 0.0, name=f"pair_k{dp.index}")
    with _family("origin-lock"):
        for k in depot_ids:
            coeffs = {}
            for kp in depot_ids:
                if kp == k:
                    continue
                origin = OriginNode(kp)
                for head in graph.successors[origin]:
                    coeffs[x[(k, (origin, head))]] = 1.0
            if coeffs:
                model.add_eq(coeffs, 0.0, name=f"lock_origin_k{k}")
    with _family("destination-lock"):
        for k in depot_ids:
            coeffs = {}
            for kp in depot_ids:
                if kp == k:
                    continue
                dest = DestinationNode(kp)
                for tail in graph.predecessors[dest]:
                    coeffs[x[(k, (tail, dest))]] = 1.0
            if coeffs:
                model.add_eq(coeffs, 0.0, name=f"lock_dest_k{k}")

    big_m = (params.s_max - params.s_min) if vi else params.s_max
    _energy_rows(model, graph, instance, eps, lambda k, arc: x[(k, arc)], depot_ids, big_m)

    if vi:
        with _family("fleet-lower-bound"):
            lb = fleet_lower_bound(instance)
            coeffs = {}
            for dp in instance.depots:
                origin = OriginNode(dp.index)
                for head in graph.successors[origin]:
                    coeffs[x[(dp.index, (origin, head))]] = 1.0
            model.add_ge(coeffs, float(lb), name="fleet_lb")

    return FormulationHandle("3i", model, graph, instance, vi, x, eps)


def build_two_index_base(graph: SchedulingGraph, instance: Instance, vi: bool, backend) -> FormulationHandle:
    """Single-binary-per-arc base model; depot-pairing families left out."""
    check_tier_separation(instance)
    model = backend.new_model("mdevsp-2i-base")
    params = instance.params
    w1, w2, w3 = instance.weights
    arcs = list(graph.arcs())

    x = {}
    with _family("variables"):
        for arc in arcs:
            tail, head = arc
            x[arc] = model.add_binary(f"x_{tail.label}_{head.label}")
        eps = _eps_variables(model, graph, params)

    objective = {}
    for (tail, head), ref in x.items():
        coef = w3 * graph.arc_energy[(tail, head)]
        if isinstance(tail, OriginNode):
            coef += w1
        if is_charging(head):
            coef += w2
        objective[ref] = coef
    model.set_objective(objective)

    with _family("trip-cover"):
        for tr in instance.trips:
            node = TripNode(tr.id)
            coeffs = {x[(tail, node)]: 1.0 for tail in graph.predecessors[node]}
            model.add_eq(coeffs, 1.0, name=f"cover_t{tr.id}")
    with _family("depot-capacity"):
        for dp in instance.depots:
            origin = OriginNode(dp.index)
            coeffs = {x[(origin, head)]: 1.0 for head in graph.successors[origin]}
            model.add_le(coeffs, dp.capacity, name=f"cap_o{dp.index}")
    with _family("flow-conservation"):
        for node in graph.nodes:
            if isinstance(node, (OriginNode, DestinationNode)):
                continue
            coeffs = {}
            for tail in graph.predecessors[node]:
                coeffs[x[(tail, node)]] = coeffs.get(x[(tail, node)], 0.0) + 1.0
            for head in graph.successors[node]:
                coeffs[x[(node, head)]] = coeffs.get(x[(node, head)], 0.0) - 1.0
            model.add_eq(coeffs, 0.0, name=f"flow_{node.label}")
    with _family("depot-pairing"):
        for dp in instance.depots:
            origin, dest = OriginNode(dp.index), DestinationNode(dp.index)
            coeffs = {x[(origin, head)]: 1.0 for head in graph.successors[origin]}
            for tail in graph.predecessors[dest]:
                ref = x[(tail, dest)]
                coeffs[ref] = coeffs.get(ref, 0.0) - 1.0
            model.add_eq(coeffs, 0.0, name=f"pair_k{dp.index}")

    big_m = (params.s_max - params.s_min) if vi else params.s_max
    _energy_rows(model, graph, instance, eps, lambda k, arc: x[arc], [None], big_m)

    if vi:
        with _family("fleet-lower-bound"):
            lb = fleet_lower_bound(instance)
            coeffs = {}
            for dp in instance.depots:
                origin = OriginNode(dp.index)
                for head in graph.successors[origin]:
                    coeffs[x[(origin, head)]] = 1.0
            model.add_ge(coeffs, float(lb), name="fleet_lb")

    return FormulationHandle("2i", model, graph, instance, vi, x, eps)
