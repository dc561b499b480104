"""Separation of depot-pairing constraints for the 2-index model.

Two exponential families are separated against candidate arc values:
infeasible-path inequalities (an origin-to-foreign-destination arc chain P
must satisfy ``sum x <= |P| - 1``) and connectivity inequalities (flow out
of any separating node set must carry every vehicle leaving the depot).
The connectivity separator solves a max-flow problem whose capacities are
the candidate values, on a graph augmented with unbounded forcing arcs so
the minimum cut always satisfies the required depot memberships.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import DestinationNode, OriginNode, SchedulingGraph

INTEGRALITY_TOL = 1e-6
VIOLATION_TOL = 1e-6
PATH_ARC_THRESHOLD = 0.00001


class StructuralError(RuntimeError):
    """Candidate values are inconsistent with a flow (backend inconsistency)."""


@dataclass(frozen=True)
class CandidatePoint:
    """Arc values of a relaxation or incumbent solution."""

    arc_values: dict
    integral: bool

    @classmethod
    def from_arc_values(cls, arc_values: dict, tol: float = INTEGRALITY_TOL):
        integral = all(min(abs(v), abs(v - 1.0)) <= tol for v in arc_values.values())
        return cls(dict(arc_values), integral)

    def value(self, arc) -> float:
        return self.arc_values.get(arc, 0.0)


@dataclass(frozen=True)
class InfeasiblePathCut:
    """sum of x over the path arcs <= len(arcs) - 1."""

    arcs: tuple
    origin: int
    dest: int

    def violation(self, candidate: CandidatePoint) -> float:
        return sum(candidate.value(a) for a in self.arcs) - (len(self.arcs) - 1)

    def describe(self) -> str:
        return (
            f"infeasible-path o{self.origin}->d{self.dest} size={len(self.arcs)}"
        )


@dataclass(frozen=True)
class ConnectivityCut:
    """Outflow of the member set must cover the depot's departures."""

    depot: int
    members: frozenset

    def violation(self, graph: SchedulingGraph, candidate: CandidatePoint) -> float:
        outflow = sum(
            candidate.value((tail, head))
            for (tail, head) in graph.arcs()
            if tail in self.members and head not in self.members
        )
        origin = OriginNode(self.depot)
        departures = sum(candidate.value((origin, head)) for head in graph.successors[origin])
        return departures - outflow

    def describe(self) -> str:
        return f"connectivity k={self.depot} |U|={len(self.members)}"


# -- integer path tracing --------------------------------------------------


def trace_integer_paths(graph: SchedulingGraph, candidate: CandidatePoint) -> list[list]:
    """Follow x=1 arcs from every origin; return the depot-mismatched paths."""
    if not candidate.integral:
        raise StructuralError("integer tracing requires an integral candidate")
    paths = []
    limit = graph.n_nodes + 1
    for node in graph.nodes:
        if not isinstance(node, OriginNode):
            continue
        for first in graph.successors[node]:
            if candidate.value((node, first)) < 0.5:
                continue
            path = [node, first]
            current = first
            while not isinstance(current, DestinationNode):
                nxt = [h for h in graph.successors[current] if candidate.value((current, h)) > 0.5]
                if len(nxt) != 1:
                    raise StructuralError(
                        f"flow conservation broken at {current.label}: {len(nxt)} active successors"
                    )
                current = nxt[0]
                path.append(current)
                if len(path) > limit:
                    raise StructuralError("path tracing exceeded node count")
            if current.depot != node.depot:
                paths.append(path)
    return paths


def _path_to_cut(path) -> InfeasiblePathCut:
    arcs = tuple((path[i], path[i + 1]) for i in range(len(path) - 1))
    return InfeasiblePathCut(arcs, path[0].depot, path[-1].depot)


def separate_infeasible_paths_integer(graph, candidate) -> list[InfeasiblePathCut]:
    return [_path_to_cut(p) for p in trace_integer_paths(graph, candidate)]


def separate_infeasible_paths_fractional(
    graph: SchedulingGraph,
    candidate: CandidatePoint,
    threshold: float = PATH_ARC_THRESHOLD,
) -> list[InfeasiblePathCut]:
    """Depth-first search for violated path inequalities on near-one arcs.

    A partial path with deficit ``len - sum(x)`` >= 1 is abandoned: arc
    values never exceed one, so the deficit cannot recover.  Per target
    depot pair the search stops at the first violated path.
    """
    cuts = []
    n_depots = sum(1 for n in graph.nodes if isinstance(n, OriginNode))
    for origin in graph.nodes:
        if not isinstance(origin, OriginNode):
            continue
        done_targets: set[int] = set()
        # stack entries: (node, deficit, arcs so far)
        stack = [(origin, 0.0, ())]
        while stack:
            node, deficit, arcs = stack.pop()
            if isinstance(node, DestinationNode):
                if (
                    node.depot != origin.depot
                    and node.depot not in done_targets
                    and deficit < 1.0 - VIOLATION_TOL
                ):
                    cuts.append(InfeasiblePathCut(arcs, origin.depot, node.depot))
                    done_targets.add(node.depot)
                continue
            if len(done_targets) == n_depots - 1:
                break
            for head in reversed(graph.successors[node]):
                value = candidate.value((node, head))
                if value <= threshold:
                    continue
                new_deficit = deficit + 1.0 - value
                if new_deficit >= 1.0 - VIOLATION_TOL:
                    continue
                stack.append((head, new_deficit, arcs + ((node, head),)))
    return [c for c in cuts if c.violation(candidate) > VIOLATION_TOL]


# -- max flow / min cut -----------------------------------------------------


def max_flow_min_cut(arc_capacities: dict, source, sink, tol: float = 1e-12):
    """Edmonds-Karp max flow; returns (flow value, source-side node set).

    Deterministic: augmenting paths are found by BFS over adjacency lists in
    insertion order.  Polynomial independently of capacity magnitudes.
    """
    residual: dict = {}
    adjacency: dict = {}

    def _ensure(node):
        if node not in adjacency:
            adjacency[node] = []

    for (u, v), cap in arc_capacities.items():
        if cap <= tol:
            continue
        _ensure(u)
        _ensure(v)
        if (u, v) not in residual:
            adjacency[u].append(v)
            residual[(u, v)] = 0.0
        if (v, u) not in residual:
            adjacency[v].append(u)
            residual[(v, u)] = 0.0
        residual[(u, v)] += cap
    _ensure(source)
    _ensure(sink)

    flow = 0.0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adjacency[u]:
                if v not in parent and residual.get((u, v), 0.0) > tol:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        bottleneck = float("inf")
        v = sink
        while parent[v] is not None:
            u = parent[v]
            bottleneck = min(bottleneck, residual[(u, v)])
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= bottleneck
            residual[(v, u)] += bottleneck
            v = u
        flow += bottleneck

    reachable = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in reachable and residual.get((u, v), 0.0) > tol:
                reachable.add(v)
                queue.append(v)
    return flow, reachable


def separate_connectivity(graph: SchedulingGraph, candidate: CandidatePoint, depot: int):
    """Min-cut separation for one depot; returns a violated cut or None.

    Forcing arcs of effectively unbounded capacity (total candidate mass
    plus one) from the depot's origin to every foreign destination and from
    every foreign origin to the depot's destination pin those nodes to the
    required cut sides.
    """
    origin = OriginNode(depot)
    dest = DestinationNode(depot)
    capacities = {arc: v for arc, v in candidate.arc_values.items() if v > 1e-12}
    unbounded = sum(capacities.values()) + 1.0
    foreign = [n.depot for n in graph.nodes if isinstance(n, OriginNode) and n.depot != depot]
    for kp in foreign:
        capacities[(origin, DestinationNode(kp))] = unbounded
        capacities[(OriginNode(kp), dest)] = unbounded

    cut_value, source_side = max_flow_min_cut(capacities, origin, dest)

    members = frozenset(n for n in graph.nodes if n in source_side)
    assert origin in members and dest not in members
    for kp in foreign:
        assert DestinationNode(kp) in members, "forcing arc failed: foreign destination outside U"
        assert OriginNode(kp) not in members, "forcing arc failed: foreign origin inside U"

    cut = ConnectivityCut(depot, members)
    if cut.violation(graph, candidate) > VIOLATION_TOL:
        return cut
    return None


def select_cuts(cuts: list, mode: str) -> list:
    """Keep the first cut in discovery order (``one``) or every cut (``all``)."""
    if mode not in ("one", "all"):
        raise ValueError(f"unknown cut selection mode {mode!r}")
    if not cuts:
        return []
    return cuts[:1] if mode == "one" else list(cuts)
