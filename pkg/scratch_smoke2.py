"""Scratch 2: crossing instance + generator + equivalence sweep."""
import time

from mdevsp.model import (
    ChargingStation, Depot, Location, ServiceTrip, VehicleParams,
    instance_from_locations, save_instance, load_instance,
)
from mdevsp.generate import BenchmarkSpec, generate_benchmark, generate_realistic_base, apply_scenario, combine_instances
from mdevsp.graph import build_graph
from mdevsp.solve import SolveConfig, solve
from mdevsp.validate import validate, brute_force_optimum, enumerate_feasible_solutions
from mdevsp.formulations import triples_equal


def crossing_instance():
    locs = {
        "D1": Location("D1", 0.0, 0.0),
        "D2": Location("D2", 100.0, 0.0),
        "As": Location("As", 0.0, 1.0),
        "Ae": Location("Ae", 100.0, 1.0),
        "Bs": Location("Bs", 100.0, 2.0),
        "Be": Location("Be", 0.0, 2.0),
    }
    params = VehicleParams(1.0, 1000.0, 0.0, 0.0, 10.0, 10.0)
    trips = [
        ServiceTrip(0, "As", "Ae", 480, 600, 120, 120.0),
        ServiceTrip(1, "Bs", "Be", 500, 620, 120, 120.0),
    ]
    depots = [Depot(0, "D1", 2), Depot(1, "D2", 2)]
    return instance_from_locations(trips, depots, [], params, locs)


inst = crossing_instance()
for form in ("2i-ip", "2i-cc"):
    for mode in ("one", "all"):
        sol = solve(inst, SolveConfig(formulation=form, add_mode=mode, vi=True, time_limit=60))
        rep = validate(inst, sol)
        print(form, mode, sol.status.value, sol.objective, "cuts:", sol.stats.cuts_added,
              "rounds:", sol.stats.rounds, "valid:", rep.passed)
sol3 = solve(inst, SolveConfig(formulation="3i", vi=True, time_limit=60))
print("3i", sol3.status.value, sol3.objective)
print("oracle:", brute_force_optimum(inst))
print("n feasible solutions:", sum(1 for _ in enumerate_feasible_solutions(inst)))

# IF mode
sol_if = solve(inst, SolveConfig(formulation="2i-ip", sep_mode="if", vi=True, time_limit=60))
print("2i-ip IF:", sol_if.status.value, sol_if.objective, "frac rounds:", sol_if.stats.fractional_rounds,
      "frac cuts:", sol_if.stats.fractional_cuts, "int cuts:", sol_if.stats.cuts_added - sol_if.stats.fractional_cuts)

# generator round trip
spec = BenchmarkSpec(10, 2, 2, seed=7)
gi = generate_benchmark(spec)
print("benchmark t_max:", gi.params.t_max, "weights:", gi.weights, "b:", [d.capacity for d in gi.depots])
g = build_graph(gi)
print("graph:", g.n_nodes, g.n_arcs)
save_instance(gi, "/tmp/gi.json")
gi2 = load_instance("/tmp/gi.json")
print("round trip equal:", gi == gi2)

t0 = time.perf_counter()
s1 = solve(gi, SolveConfig(formulation="3i", vi=True, time_limit=120))
t1 = time.perf_counter()
s2 = solve(gi, SolveConfig(formulation="2i-ip", vi=True, time_limit=120))
t2 = time.perf_counter()
s3 = solve(gi, SolveConfig(formulation="2i-cc", vi=True, time_limit=120))
t3 = time.perf_counter()
print("3i:", s1.objective, f"{t1-t0:.2f}s", "| 2i-ip:", s2.objective, s2.stats.cuts_added, f"{t2-t1:.2f}s",
      "| 2i-cc:", s3.objective, s3.stats.cuts_added, f"{t3-t2:.2f}s")
print("equal:", triples_equal(s1.objective, s2.objective), triples_equal(s1.objective, s3.objective))
rep = validate(gi, s3)
print("validated:", rep.passed, rep.codes(), "obj check:", rep.objective)

# realistic generators
for tech in ("DB", "BEB", "FCEB"):
    ri = generate_realistic_base(1, 10, tech, seed=3)
    print(tech, "params:", ri.params, "stations:", len(ri.stations))
b1 = generate_realistic_base(1, 10, "BEB", seed=3)
b2 = generate_realistic_base(2, 10, "BEB", seed=3)
comb = combine_instances([b1, b2])
print("combined K:", comb.n_depots, "stations:", len(comb.stations), "trips:", comb.n_trips, "b:", [d.capacity for d in comb.depots])
cold = apply_scenario(b1, "cold")
print("cold theta:", cold.params.consumption_rate)
bat = apply_scenario(b1, "battery")
print("battery:", bat.params.s_min, bat.params.s_max, bat.params.s_min_dep, bat.params.t_max)
