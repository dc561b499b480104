"""Scratch 4: oracle vs orchestrator on tiny instances."""
import itertools
import time

from mdevsp.generate import BenchmarkSpec, generate_benchmark
from mdevsp.solve import SolveConfig, solve
from mdevsp.validate import brute_force_optimum
from mdevsp.formulations import triples_equal
from mdevsp.backend import SolveStatus

t0 = time.perf_counter()
count = 0
for n, K, C in itertools.product((4, 5), (1, 2), (1, 2)):
    for seed in (11, 12):
        inst = generate_benchmark(BenchmarkSpec(n, K, C, seed=seed))
        t1 = time.perf_counter()
        oracle = brute_force_optimum(inst)
        t_oracle = time.perf_counter() - t1
        sol = solve(inst, SolveConfig(formulation="2i-cc", vi=True, time_limit=60))
        ok = sol.status == SolveStatus.OPTIMAL and triples_equal(sol.objective, oracle)
        count += 1
        print(f"n={n} K={K} C={C} s={seed}: oracle={oracle} solver={sol.objective} ok={ok} (oracle {t_oracle:.2f}s)")
print(f"{count} instances, total {time.perf_counter()-t0:.1f}s")
