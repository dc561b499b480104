"""Scratch smoke test (deleted before delivery)."""
import numpy as np

from mdevsp.model import (
    ChargingStation, Depot, Instance, Location, ServiceTrip, VehicleParams,
    fleet_lower_bound,
)
from mdevsp.graph import build_graph, PartialChargeNode, FullChargeNode
from mdevsp.backend import get_backend
from mdevsp.formulations import build_three_index, build_two_index_base
from mdevsp.solve import SolveConfig, solve
from mdevsp.validate import validate, brute_force_optimum

# Table rows (order: ST1 ST2 ST3 o1/d1 o2/d2 a1 a2), entries are minutes == km
T = np.array([
    [0, 28, 5, 34, 15, 28, 19],
    [28, 0, 5, 34, 15, 28, 19],
    [35, 35, 0, 7, 49, 32, 23],
    [40, 40, 29, 0, 47, 26, 26],
    [39, 39, 19, 47, 0, 33, 34],
    [50, 50, 24, 20, 30, 0, 36],
    [15, 15, 16, 26, 34, 35, 0],
], dtype=float)


def table_instance(two_depots=False):
    idx = {"t1": 0, "t2": 1, "t3": 2, "dep1": 3, "dep2": 4, "a1": 5, "a2": 6}
    if two_depots:
        order = ["t1", "t2", "t3", "dep1", "dep2", "dep1", "dep2", "a1", "a2"]
    else:
        order = ["t1", "t2", "t3", "dep1", "dep1", "a1", "a2"]
    n = len(order)
    t = np.zeros((n, n))
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            t[i, j] = T[idx[a], idx[b]]
    d = t.copy()
    theta = 1.3
    p = theta * d
    params = VehicleParams(theta, 1000.0, 10.0, 700.0, 10.0, 50.0 / 6.0, t_max=120.0)
    locs = {name: Location(name, 0.0, 0.0) for name in ("L1s", "L1e", "L2s", "L2e", "L3s", "L3e", "D1", "D2", "A1", "A2")}
    trips = [
        ServiceTrip(1, "L1s", "L1e", 795, 840, 45, theta * 45),
        ServiceTrip(2, "L2s", "L2e", 990, 1035, 45, theta * 45),
        ServiceTrip(3, "L3s", "L3e", 1025, 1110, 85, theta * 85),
    ]
    depots = [Depot(0, "D1", 3)]
    if two_depots:
        depots.append(Depot(1, "D2", 3))
    stations = [ChargingStation("a1", "A1"), ChargingStation("a2", "A2")]
    return Instance(trips, depots, stations, params, locs, t, d, p)


inst = table_instance()
print("LB:", fleet_lower_bound(inst))
g = build_graph(inst, prune=False)
print("I1 nodes:", g.n_nodes, "arcs:", g.n_arcs)
partials = [n for n in g.nodes if isinstance(n, PartialChargeNode)]
fulls = [n for n in g.nodes if isinstance(n, FullChargeNode)]
print("partials:", [(pn.label, pn.window) for pn in partials])
print("fulls:", len(fulls))

inst2 = table_instance(two_depots=True)
g2 = build_graph(inst2, prune=False)
print("I2 nodes:", g2.n_nodes, "arcs:", g2.n_arcs)

backend = get_backend()
for vi in (False, True):
    h3 = build_three_index(g, inst, vi, backend)
    r3 = h3.model.solve()
    t3 = h3.objective_triple(h3.arc_values(r3.values))
    print(f"3i vi={vi}:", r3.status.value, t3)

for form in ("3i", "2i-ip", "2i-cc"):
    sol = solve(inst, SolveConfig(formulation=form, vi=True, time_limit=60))
    rep = validate(inst, sol)
    print(form, sol.status.value, sol.objective, "cuts:", sol.stats.cuts_added, "valid:", rep.passed, rep.codes())

print("oracle I1:", brute_force_optimum(inst))
for form in ("3i", "2i-ip", "2i-cc"):
    sol = solve(inst2, SolveConfig(formulation=form, vi=True, time_limit=60))
    print("I2", form, sol.status.value, sol.objective, "cuts:", sol.stats.cuts_added)
print("oracle I2:", brute_force_optimum(inst2))
