"""Acyclic scheduling graph with embedded time windows.

The graph is built from an instance in five steps: depot/trip arcs,
time-feasible trip pair arcs, full-charging nodes after every trip,
charging nodes between trip pairs (filtered by station dominance and an
energy-gain gate), and full-charge arcs into the destination depots.
Every path from an origin to a destination is time-feasible by
construction; only energy and depot pairing remain for the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Instance, ServiceTrip

TIME_EQ_TOL = 1e-9


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class TripNode:
    trip: int

    @property
    def label(self) -> str:
        return f"t{self.trip}"


@dataclass(frozen=True)
class OriginNode:
    depot: int

    @property
    def label(self) -> str:
        return f"o{self.depot}"


@dataclass(frozen=True)
class DestinationNode:
    depot: int

    @property
    def label(self) -> str:
        return f"d{self.depot}"


@dataclass(frozen=True)
class FullChargeNode:
    """Charging to full capacity at a station directly after a trip."""

    trip: int
    station: str

    @property
    def label(self) -> str:
        return f"cf_t{self.trip}_{self.station}"


@dataclass(frozen=True)
class PartialChargeNode:
    """Bounded-window charging at a station between two specific trips."""

    trip: int
    next_trip: int
    station: str
    window: float = field(compare=False)    # minutes available
    capacity: float = field(compare=False)  # energy chargeable = rate * window

    @property
    def label(self) -> str:
        return f"cp_t{self.trip}_t{self.next_trip}_{self.station}"


Node = TripNode | OriginNode | DestinationNode | FullChargeNode | PartialChargeNode


def is_charging(node) -> bool:
    return isinstance(node, (FullChargeNode, PartialChargeNode))


class SchedulingGraph:
    """Node/arc network plus adjacency maps and the feasible trip-pair set."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.nodes: list[Node] = []
        self.arc_energy: dict[tuple[Node, Node], float] = {}
        self.successors: dict[Node, list[Node]] = {}
        self.predecessors: dict[Node, list[Node]] = {}
        self.feasible_pairs: set[tuple[int, int]] = set()

    # -- construction helpers ------------------------------------------

    def _add_node(self, node: Node):
        if node in self.successors:
            raise GraphError(f"duplicate node {node.label}")
        self.nodes.append(node)
        self.successors[node] = []
        self.predecessors[node] = []

    def _add_arc(self, tail: Node, head: Node, energy: float):
        key = (tail, head)
        if key in self.arc_energy:
            raise GraphError(f"duplicate arc {tail.label}->{head.label}")
        self.arc_energy[key] = energy
        self.successors[tail].append(head)
        self.predecessors[head].append(tail)

    def _remove_node(self, node: Node):
        for head in list(self.successors[node]):
            del self.arc_energy[(node, head)]
            self.predecessors[head].remove(node)
        for tail in list(self.predecessors[node]):
            del self.arc_energy[(tail, node)]
            self.successors[tail].remove(node)
        del self.successors[node]
        del self.predecessors[node]
        self.nodes.remove(node)

    # -- queries --------------------------------------------------------

    def arcs(self):
        return self.arc_energy.keys()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arc_energy)

    def charging_nodes(self):
        return [n for n in self.nodes if is_charging(n)]

    def charge_window(self, node) -> tuple[float, float]:
        """(available minutes, chargeable energy) at a charging node."""
        params = self.instance.params
        if isinstance(node, FullChargeNode):
            return params.t_max, params.charge_rate * params.t_max
        if isinstance(node, PartialChargeNode):
            return node.window, node.capacity
        raise GraphError(f"{node.label} is not a charging node")

    def station_of(self, node) -> str:
        if not is_charging(node):
            raise GraphError(f"{node.label} is not a charging node")
        return node.station

    def topological_order(self) -> list[Node]:
        indeg = {n: len(self.predecessors[n]) for n in self.nodes}
        frontier = [n for n in self.nodes if indeg[n] == 0]
        order = []
        while frontier:
            node = frontier.pop()
            order.append(node)
            for head in self.successors[node]:
                indeg[head] -= 1
                if indeg[head] == 0:
                    frontier.append(head)
        if len(order) != len(self.nodes):
            raise GraphError("graph contains a cycle")
        return order

    # -- export ----------------------------------------------------------

    def to_edge_list(self) -> str:
        lines = [f"{t.label} -> {h.label} p={p:.9g}" for (t, h), p in self.arc_energy.items()]
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        out = ["digraph scheduling {"]
        for node in self.nodes:
            shape = "box" if is_charging(node) else "ellipse"
            out.append(f'  "{node.label}" [shape={shape}];')
        for (t, h), p in self.arc_energy.items():
            out.append(f'  "{t.label}" -> "{h.label}" [label="{p:.4g}"];')
        out.append("}")
        return "\n".join(out) + "\n"


# -- elementary predicates ----------------------------------------------

def time_feasible(i: ServiceTrip, j: ServiceTrip, t_ij: float) -> bool:
    """True when trip j can start after finishing trip i plus the deadhead."""
    return i.start_time + i.duration + t_ij <= j.start_time


def dominates(instance: Instance, a_prime: str, a: str, from_key, to_key) -> bool:
    """Station a_prime dominates a for the move from_key -> to_key.

    Strict on both legs; exact ties keep both stations.
    """
    if a_prime == a:
        return False
    d = instance.distance
    return (
        d(from_key, ("station", a_prime)) < d(from_key, ("station", a))
        and d(("station", a_prime), to_key) < d(("station", a), to_key)
    )


def nondominated_stations(instance: Instance, from_key, to_key) -> list[str]:
    stations = [st.id for st in instance.stations]
    return [
        a
        for a in stations
        if not any(dominates(instance, ap, a, from_key, to_key) for ap in stations)
    ]


def partial_charge_window(instance: Instance, i: ServiceTrip, j: ServiceTrip, a: str):
    """Charging minutes and energy available at station a between trips i and j.

    May be non-positive, meaning no charging is possible in the slack.
    """
    t = instance.travel_time
    slack = j.start_time - (
        i.start_time + i.duration + t(("trip", i.id), ("station", a)) + t(("station", a), ("trip", j.id))
    )
    window = min(slack, instance.params.t_max)
    return window, instance.params.charge_rate * window


# -- graph construction ---------------------------------------------------

def build_graph(instance: Instance, *, dominance: bool = True, prune: bool = True) -> SchedulingGraph:
    """Run the five construction steps on an instance.

    ``dominance=False`` disables the station filter (keeps every station for
    every pair); ``prune=False`` keeps full-charging nodes that end up with
    no outgoing arc.
    """
    g = SchedulingGraph(instance)
    params = instance.params
    trips = instance.trips
    station_ids = [st.id for st in instance.stations]

    trip_nodes = {tr.id: TripNode(tr.id) for tr in trips}
    origin_nodes = {dp.index: OriginNode(dp.index) for dp in instance.depots}
    dest_nodes = {dp.index: DestinationNode(dp.index) for dp in instance.depots}
    for tr in trips:
        g._add_node(trip_nodes[tr.id])
    for dp in instance.depots:
        g._add_node(origin_nodes[dp.index])
    for dp in instance.depots:
        g._add_node(dest_nodes[dp.index])

    p = instance.deadhead_energy

    # step 1: depot <-> trip arcs for every depot and trip
    for dp in instance.depots:
        for tr in trips:
            g._add_arc(origin_nodes[dp.index], trip_nodes[tr.id], p(("origin", dp.index), ("trip", tr.id)))
            g._add_arc(trip_nodes[tr.id], dest_nodes[dp.index], p(("trip", tr.id), ("dest", dp.index)))

    # step 2: arcs between time-feasible trip pairs
    for i in trips:
        for j in trips:
            if i.id == j.id:
                continue
            if time_feasible(i, j, instance.travel_time(("trip", i.id), ("trip", j.id))):
                g.feasible_pairs.add((i.id, j.id))
                g._add_arc(trip_nodes[i.id], trip_nodes[j.id], p(("trip", i.id), ("trip", j.id)))

    # step 3: a full-charging node after every trip at every station
    full_nodes: dict[tuple[int, str], FullChargeNode] = {}
    for tr in trips:
        for a in station_ids:
            node = FullChargeNode(tr.id, a)
            full_nodes[(tr.id, a)] = node
            g._add_node(node)
            g._add_arc(trip_nodes[tr.id], node, p(("trip", tr.id), ("station", a)))

    # step 4: charging between trip pairs, dominated stations excluded
    for (i_id, j_id) in sorted(g.feasible_pairs):
        i, j = instance.trip(i_id), instance.trip(j_id)
        if dominance:
            candidates = nondominated_stations(instance, ("trip", i_id), ("trip", j_id))
        else:
            candidates = list(station_ids)
        for a in candidates:
            window, chargeable = partial_charge_window(instance, i, j, a)
            detour = p(("trip", i_id), ("station", a)) + p(("station", a), ("trip", j_id))
            if not detour < chargeable:
                continue
            if abs(window - params.t_max) <= TIME_EQ_TOL:
                node = full_nodes[(i_id, a)]
                g._add_arc(node, trip_nodes[j_id], p(("station", a), ("trip", j_id)))
            elif window >= params.t_min - TIME_EQ_TOL and window < params.t_max:
                node = PartialChargeNode(i_id, j_id, a, window, chargeable)
                g._add_node(node)
                g._add_arc(trip_nodes[i_id], node, p(("trip", i_id), ("station", a)))
                g._add_arc(node, trip_nodes[j_id], p(("station", a), ("trip", j_id)))

    # step 5: full charge before returning to each depot
    for tr in trips:
        for dp in instance.depots:
            if dominance:
                candidates = nondominated_stations(instance, ("trip", tr.id), ("dest", dp.index))
            else:
                candidates = list(station_ids)
            for a in candidates:
                node = full_nodes[(tr.id, a)]
                g._add_arc(node, dest_nodes[dp.index], p(("station", a), ("dest", dp.index)))

    if prune:
        for node in list(full_nodes.values()):
            if not g.successors[node]:
                g._remove_node(node)

    return g
