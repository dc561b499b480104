"""Scratch 3: equivalence sweep + oracle cross-check timing."""
import itertools
import time

from mdevsp.generate import BenchmarkSpec, generate_benchmark
from mdevsp.solve import SolveConfig, solve
from mdevsp.validate import brute_force_optimum, validate
from mdevsp.formulations import triples_equal
from mdevsp.backend import SolveStatus

t_all = time.perf_counter()
n_inst = 0
for n, K, C in itertools.product((8, 12), (1, 2, 3), (1, 2)):
    for seed in (1, 2):
        inst = generate_benchmark(BenchmarkSpec(n, K, C, seed=seed))
        n_inst += 1
        triples = {}
        for form in ("3i", "2i-ip", "2i-cc"):
            for vi in (False, True):
                t0 = time.perf_counter()
                sol = solve(inst, SolveConfig(formulation=form, vi=vi, time_limit=120))
                dt = time.perf_counter() - t0
                if sol.status != SolveStatus.OPTIMAL:
                    print(f"n={n} K={K} C={C} s={seed} {form} vi={vi}: {sol.status.value} !!")
                    continue
                triples[(form, vi)] = (sol.objective, dt, sol.stats.cuts_added)
        base = triples[("3i", True)][0]
        ok = all(triples_equal(base, t[0]) for t in triples.values())
        times = " ".join(f"{form}{'+vi' if vi else ''}:{t[1]:.2f}s/{t[2]}c" for (form, vi), t in triples.items())
        rep = validate(inst, solve(inst, SolveConfig(formulation="2i-cc", vi=True, time_limit=120)))
        print(f"n={n} K={K} C={C} s={seed} equal={ok} valid={rep.passed} obj={base} | {times}")
print(f"total instances={n_inst} elapsed={time.perf_counter()-t_all:.1f}s")
