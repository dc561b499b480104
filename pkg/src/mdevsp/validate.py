"""Independent feasibility checking and a small-scale exact oracle.

The validator re-derives every feasibility condition straight from the
instance data (never from the scheduling graph or the MILP): trip cover,
depot pairing, charging windows and dwell, state-of-charge floors and cap,
and depot capacities.  The oracle enumerates every partition of the trips
into time-feasible chains, every depot assignment, and every charging
insertion available in the scheduling graph, and returns the lexicographic
minimum objective; it is deliberately guarded to tiny sizes.

Schedules are exchanged as element sequences:

    ("origin", k), ("trip", i), ("charge", station_id, amount), ("dest", k)

where :func:`feasible_exists` accepts ("charge", station_id) without an
amount and decides amounts greedily.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .formulations import ObjectiveTriple
from .graph import (
    DestinationNode,
    OriginNode,
    SchedulingGraph,
    TripNode,
    build_graph,
    is_charging,
)
from .model import Instance

SOC_TOL = 1e-6
TIME_TOL = 1e-9

#: Stable violation codes (documented in the README).
VIOLATION_CODES = {
    "MALFORMED_SEQUENCE": "schedule is not origin, trips/charges, destination",
    "DEPOT_MISMATCH": "schedule returns to a different depot than it left",
    "TRIP_NOT_COVERED": "a service trip appears in no schedule",
    "TRIP_MULTIPLE_COVER": "a service trip appears more than once",
    "TIME_INFEASIBLE": "consecutive trips violate start/end time feasibility",
    "DWELL_BELOW_MIN": "charging slack is below the minimum dwell",
    "CHARGE_NEGATIVE": "negative charging amount",
    "CHARGE_EXCEEDS_WINDOW": "charging amount exceeds the window capacity",
    "SOC_EXCEEDS_CAP": "state of charge above battery capacity",
    "SOC_BELOW_MIN": "state of charge below the en-route floor",
    "SOC_BELOW_DEPOT_MIN": "return state of charge below the depot floor",
    "DEPOT_CAPACITY_EXCEEDED": "more vehicles at a depot than available",
}


class SizeGuardError(ValueError):
    """Oracle invoked beyond its guarded instance size."""


@dataclass(frozen=True)
class Violation:
    code: str
    schedule: int | None
    where: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    objective: ObjectiveTriple | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {"code": v.code, "schedule": v.schedule, "where": v.where, "detail": v.detail}
                for v in self.violations
            ],
            "objective": None
            if self.objective is None
            else {
                "n_vehicles": self.objective.n_vehicles,
                "n_charges": self.objective.n_charges,
                "deadhead_energy": self.objective.deadhead_energy,
            },
        }


def _entity_key(element):
    kind = element[0]
    if kind == "origin":
        return ("origin", element[1])
    if kind == "dest":
        return ("dest", element[1])
    if kind == "trip":
        return ("trip", element[1])
    if kind == "charge":
        return ("station", element[1])
    raise ValueError(f"unknown element kind {kind!r}")


def _charge_window(instance: Instance, prev_trip_id: int, station: str, nxt) -> float:
    """Minutes available for charging at ``station`` after a trip, before ``nxt``."""
    params = instance.params
    if nxt[0] == "dest":
        return params.t_max
    i = instance.trip(prev_trip_id)
    j = instance.trip(nxt[1])
    slack = j.start_time - (
        i.start_time
        + i.duration
        + instance.travel_time(("trip", i.id), ("station", station))
        + instance.travel_time(("station", station), ("trip", j.id))
    )
    return min(slack, params.t_max)


def _structurally_valid(instance, elems):
    """Return None if well-formed, else a description of the defect."""
    if len(elems) < 3:
        return "schedule has fewer than three elements"
    if elems[0][0] != "origin":
        return "schedule does not start at an origin depot"
    if elems[-1][0] != "dest":
        return "schedule does not end at a destination depot"
    if not any(e[0] == "trip" for e in elems):
        return "schedule contains no service trip"
    depot_ids = {dp.index for dp in instance.depots}
    if elems[0][1] not in depot_ids or elems[-1][1] not in depot_ids:
        return "unknown depot index"
    for pos, el in enumerate(elems[1:-1], start=1):
        if el[0] == "trip":
            if el[1] not in {tr.id for tr in instance.trips}:
                return f"unknown trip id {el[1]}"
        elif el[0] == "charge":
            if el[1] not in {st.id for st in instance.stations}:
                return f"unknown station id {el[1]!r}"
            if elems[pos - 1][0] != "trip":
                return "charging not directly after a service trip"
        else:
            return f"element kind {el[0]!r} not allowed inside a schedule"
    return None


def validate(instance: Instance, solution) -> ValidationReport:
    """Check a solution against all feasibility conditions.

    ``solution`` is either a list of element sequences or any object with a
    ``schedules`` attribute whose entries provide ``to_elements()``.
    Malformed schedules are reported, never raised on.
    """
    if hasattr(solution, "schedules"):
        schedules = [s.to_elements() for s in solution.schedules]
    else:
        schedules = [list(s) for s in solution]

    report = ValidationReport()
    params = instance.params
    add = report.violations.append

    cover: dict[int, int] = {tr.id: 0 for tr in instance.trips}
    depot_usage: dict[int, int] = {dp.index: 0 for dp in instance.depots}
    total_charges = 0
    total_deadhead = 0.0
    all_structured = True

    for s_idx, elems in enumerate(schedules):
        defect = _structurally_valid(instance, elems)
        if defect is not None:
            add(Violation("MALFORMED_SEQUENCE", s_idx, "schedule", defect))
            all_structured = False
            continue

        start_k, end_k = elems[0][1], elems[-1][1]
        depot_usage[start_k] = depot_usage.get(start_k, 0) + 1
        if start_k != end_k:
            add(
                Violation(
                    "DEPOT_MISMATCH", s_idx, elems[-1][0] + str(end_k),
                    f"starts at depot {start_k}, ends at depot {end_k}",
                )
            )
        for el in elems:
            if el[0] == "trip":
                if el[1] in cover:
                    cover[el[1]] += 1

        # time feasibility and charging windows
        for pos in range(1, len(elems) - 1):
            el = elems[pos]
            if el[0] == "trip" and elems[pos + 1][0] == "trip":
                i = instance.trip(el[1])
                j = instance.trip(elems[pos + 1][1])
                if i.start_time + i.duration + instance.travel_time(("trip", i.id), ("trip", j.id)) > j.start_time + TIME_TOL:
                    add(
                        Violation(
                            "TIME_INFEASIBLE", s_idx, f"t{i.id}->t{j.id}",
                            "next trip starts before the deadhead can finish",
                        )
                    )
            elif el[0] == "charge":
                station = el[1]
                amount = float(el[2]) if len(el) > 2 else 0.0
                window = _charge_window(instance, elems[pos - 1][1], station, elems[pos + 1])
                capacity = params.charge_rate * window
                where = f"charge@{station}"
                if window < params.t_min - TIME_TOL:
                    add(
                        Violation(
                            "DWELL_BELOW_MIN", s_idx, where,
                            f"available window {window:.6g} min below t_min {params.t_min:.6g}",
                        )
                    )
                if amount < -SOC_TOL:
                    add(Violation("CHARGE_NEGATIVE", s_idx, where, f"amount {amount:.6g}"))
                if amount > capacity + SOC_TOL:
                    add(
                        Violation(
                            "CHARGE_EXCEEDS_WINDOW", s_idx, where,
                            f"amount {amount:.6g} exceeds window capacity {capacity:.6g}",
                        )
                    )

        # forward state-of-charge simulation (amounts clamped for the trace)
        soc = params.s_max
        for pos in range(1, len(elems)):
            prev, el = elems[pos - 1], elems[pos]
            p_move = instance.deadhead_energy(_entity_key(prev), _entity_key(el))
            total_deadhead += p_move
            arrival = soc - p_move
            if el[0] == "dest":
                if arrival < params.s_min_dep - SOC_TOL:
                    add(
                        Violation(
                            "SOC_BELOW_DEPOT_MIN", s_idx, f"d{el[1]}",
                            f"return SOC {arrival:.6g} below {params.s_min_dep:.6g}",
                        )
                    )
                soc = arrival
                continue
            if arrival < params.s_min - SOC_TOL:
                add(
                    Violation(
                        "SOC_BELOW_MIN", s_idx, _element_name(el),
                        f"arrival SOC {arrival:.6g} below {params.s_min:.6g}",
                    )
                )
            if el[0] == "trip":
                soc = arrival - instance.trip(el[1]).energy
                if soc < params.s_min - SOC_TOL:
                    add(
                        Violation(
                            "SOC_BELOW_MIN", s_idx, _element_name(el),
                            f"SOC {soc:.6g} after trip below {params.s_min:.6g}",
                        )
                    )
            else:  # charge
                amount = float(el[2]) if len(el) > 2 else 0.0
                window = _charge_window(instance, prev[1], el[1], elems[pos + 1])
                capacity = params.charge_rate * max(window, 0.0)
                raw = arrival + amount
                if raw > params.s_max + SOC_TOL:
                    add(
                        Violation(
                            "SOC_EXCEEDS_CAP", s_idx, _element_name(el),
                            f"SOC {raw:.6g} above capacity {params.s_max:.6g}",
                        )
                    )
                clamped = min(max(amount, 0.0), capacity)
                soc = min(arrival + clamped, params.s_max)
        total_charges += sum(1 for e in elems if e[0] == "charge")

    for trip_id, count in cover.items():
        if count == 0:
            add(Violation("TRIP_NOT_COVERED", None, f"t{trip_id}", "covered by no schedule"))
        elif count > 1:
            add(Violation("TRIP_MULTIPLE_COVER", None, f"t{trip_id}", f"covered {count} times"))

    for dp in instance.depots:
        if depot_usage.get(dp.index, 0) > dp.capacity:
            add(
                Violation(
                    "DEPOT_CAPACITY_EXCEEDED", None, f"o{dp.index}",
                    f"{depot_usage[dp.index]} vehicles exceed capacity {dp.capacity}",
                )
            )

    if all_structured:
        report.objective = ObjectiveTriple(len(schedules), total_charges, total_deadhead)
    return report


def _element_name(el):
    if el[0] == "trip":
        return f"t{el[1]}"
    if el[0] == "charge":
        return f"charge@{el[1]}"
    return f"{el[0]}{el[1]}"


# -- feasibility of a sequence under the greedy charging policy --------------


def feasible_exists(instance: Instance, sequence) -> bool:
    """Can SOC-feasible charging amounts be chosen for this node sequence?

    Decided by charging the maximum possible amount at every charging stop:
    only lower bounds constrain the remainder of the path, so the greedy
    policy dominates any other.  Structural invalidity raises ValueError,
    which is distinct from returning False (infeasible).
    """
    elems = [tuple(e) for e in sequence]
    defect = _structurally_valid(instance, elems)
    if defect is not None:
        raise ValueError(f"structurally invalid sequence: {defect}")
    if elems[0][1] != elems[-1][1]:
        raise ValueError("structurally invalid sequence: depot mismatch")
    params = instance.params
    soc = params.s_max
    for pos in range(1, len(elems)):
        prev, el = elems[pos - 1], elems[pos]
        arrival = soc - instance.deadhead_energy(_entity_key(prev), _entity_key(el))
        if el[0] == "dest":
            return arrival >= params.s_min_dep - SOC_TOL
        if arrival < params.s_min - SOC_TOL:
            return False
        if el[0] == "trip":
            soc = arrival - instance.trip(el[1]).energy
            if soc < params.s_min - SOC_TOL:
                return False
        else:
            window = _charge_window(instance, prev[1], el[1], elems[pos + 1])
            if window < params.t_min - TIME_TOL:
                return False
            soc = min(arrival + params.charge_rate * window, params.s_max)
    raise AssertionError("sequence did not end at a destination")


# -- exhaustive oracle --------------------------------------------------------

ORACLE_MAX_TRIPS = 6
ORACLE_MAX_DEPOTS = 2


def _guard(instance: Instance):
    if instance.n_trips > ORACLE_MAX_TRIPS or instance.n_depots > ORACLE_MAX_DEPOTS:
        raise SizeGuardError(
            f"oracle guarded to <= {ORACLE_MAX_TRIPS} trips and <= {ORACLE_MAX_DEPOTS} depots; "
            f"got {instance.n_trips} trips, {instance.n_depots} depots"
        )


def _chain_partitions(trip_ids, can_follow):
    """All partitions of the trips into chains of consecutively feasible pairs."""
    chains: list[list[int]] = []

    def rec(idx):
        if idx == len(trip_ids):
            yield [tuple(c) for c in chains]
            return
        t = trip_ids[idx]
        for c in chains:
            if can_follow(c[-1], t):
                c.append(t)
                yield from rec(idx + 1)
                c.pop()
        chains.append([t])
        yield from rec(idx + 1)
        chains.pop()

    yield from rec(0)


@dataclass(frozen=True)
class _LegOption:
    arcs: tuple
    charge_station: str | None
    energy: float


def _junction_options(graph: SchedulingGraph, i: int, j: int) -> list[_LegOption]:
    ni, nj = TripNode(i), TripNode(j)
    options = []
    if (ni, nj) in graph.arc_energy:
        options.append(_LegOption(((ni, nj),), None, graph.arc_energy[(ni, nj)]))
    for mid in graph.successors[ni]:
        if is_charging(mid) and (mid, nj) in graph.arc_energy:
            energy = graph.arc_energy[(ni, mid)] + graph.arc_energy[(mid, nj)]
            options.append(_LegOption(((ni, mid), (mid, nj)), mid.station, energy))
    return options


def _terminal_options(graph: SchedulingGraph, i: int, depot: int) -> list[_LegOption]:
    ni, nd = TripNode(i), DestinationNode(depot)
    options = []
    if (ni, nd) in graph.arc_energy:
        options.append(_LegOption(((ni, nd),), None, graph.arc_energy[(ni, nd)]))
    for mid in graph.successors[ni]:
        if is_charging(mid) and (mid, nd) in graph.arc_energy:
            energy = graph.arc_energy[(ni, mid)] + graph.arc_energy[(mid, nd)]
            options.append(_LegOption(((ni, mid), (mid, nd)), mid.station, energy))
    return options


def _chain_routings(graph: SchedulingGraph, chain, depot: int):
    """Yield (elements, arcs, n_charges, deadhead) for every routing of a chain."""
    instance = graph.instance
    origin = OriginNode(depot)
    first = TripNode(chain[0])
    if (origin, first) not in graph.arc_energy:
        return
    start_energy = graph.arc_energy[(origin, first)]
    legs = [_junction_options(graph, chain[pos], chain[pos + 1]) for pos in range(len(chain) - 1)]
    legs.append(_terminal_options(graph, chain[-1], depot))
    if any(not options for options in legs):
        return
    for combo in itertools.product(*legs):
        elements = [("origin", depot), ("trip", chain[0])]
        arcs = [(origin, first)]
        charges = 0
        deadhead = start_energy
        for pos, option in enumerate(combo):
            if option.charge_station is not None:
                elements.append(("charge", option.charge_station))
                charges += 1
            if pos < len(chain) - 1:
                elements.append(("trip", chain[pos + 1]))
            arcs.extend(option.arcs)
            deadhead += option.energy
        elements.append(("dest", depot))
        if feasible_exists(instance, elements):
            yield elements, tuple(arcs), charges, deadhead


def _best_chain_cost(graph, chain, depot, cache):
    key = (chain, depot)
    if key not in cache:
        best = None
        for _, _, charges, deadhead in _chain_routings(graph, chain, depot):
            cand = (charges, deadhead)
            if best is None or cand < best:
                best = cand
        cache[key] = best
    return cache[key]


def brute_force_optimum(instance: Instance, graph: SchedulingGraph | None = None) -> ObjectiveTriple:
    """Lexicographically optimal objective by exhaustive enumeration.

    Restricted to the charging options present in the scheduling graph,
    i.e. the same graph-restricted problem the MILP formulations solve.
    """
    _guard(instance)
    if graph is None:
        graph = build_graph(instance)
    trip_ids = [tr.id for tr in sorted(instance.trips, key=lambda t: (t.start_time, t.id))]
    can_follow = lambda i, j: (i, j) in graph.feasible_pairs
    depot_ids = [dp.index for dp in instance.depots]
    capacity = {dp.index: dp.capacity for dp in instance.depots}
    cache: dict = {}

    best: tuple | None = None
    for partition in _chain_partitions(trip_ids, can_follow):
        n_vehicles = len(partition)
        if best is not None and n_vehicles > best[0]:
            continue
        per_chain = [
            [k for k in depot_ids if _best_chain_cost(graph, chain, k, cache) is not None]
            for chain in partition
        ]
        if any(not ks for ks in per_chain):
            continue
        for assignment in itertools.product(*per_chain):
            usage: dict[int, int] = {}
            for k in assignment:
                usage[k] = usage.get(k, 0) + 1
            if any(usage[k] > capacity[k] for k in usage):
                continue
            charges = 0
            deadhead = 0.0
            for chain, k in zip(partition, assignment):
                c, d = _best_chain_cost(graph, chain, k, cache)
                charges += c
                deadhead += d
            cand = (n_vehicles, charges, deadhead)
            if best is None or cand < best:
                best = cand
    if best is None:
        raise ValueError("instance has no feasible schedule")
    return ObjectiveTriple(*best)


def enumerate_feasible_solutions(instance: Instance, graph: SchedulingGraph | None = None):
    """Yield (arc set, objective triple) for every feasible full solution.

    Exhaustive over partitions, depot assignments, and charging routings;
    used to certify that separation cuts exclude no depot-correct solution.
    """
    _guard(instance)
    if graph is None:
        graph = build_graph(instance)
    trip_ids = [tr.id for tr in sorted(instance.trips, key=lambda t: (t.start_time, t.id))]
    can_follow = lambda i, j: (i, j) in graph.feasible_pairs
    depot_ids = [dp.index for dp in instance.depots]
    capacity = {dp.index: dp.capacity for dp in instance.depots}

    for partition in _chain_partitions(trip_ids, can_follow):
        routings_per_chain_depot = {}
        for chain in partition:
            for k in depot_ids:
                if (chain, k) not in routings_per_chain_depot:
                    routings_per_chain_depot[(chain, k)] = list(_chain_routings(graph, chain, k))
        for assignment in itertools.product(depot_ids, repeat=len(partition)):
            usage: dict[int, int] = {}
            for k in assignment:
                usage[k] = usage.get(k, 0) + 1
            if any(usage[k] > capacity[k] for k in usage):
                continue
            pools = [routings_per_chain_depot[(chain, k)] for chain, k in zip(partition, assignment)]
            if any(not pool for pool in pools):
                continue
            for combo in itertools.product(*pools):
                arcs = frozenset(a for _, routing_arcs, _, _ in combo for a in routing_arcs)
                charges = sum(c for _, _, c, _ in combo)
                deadhead = sum(d for _, _, _, d in combo)
                yield arcs, ObjectiveTriple(len(partition), charges, deadhead)
