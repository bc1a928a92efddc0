# %% [markdown]
# Exact search versus negotiation on a generated instance
#
# We draw a class-1 instance (10x10 bins, small items), solve it with the
# one-item-per-bin EDD baseline, the agent-based heuristic, and the
# branching search under a short time limit, and compare objectives.

# %%
import time

from jitbp import AbhParams, GenSpec, construct, edd_solution, generate, solve_cph, validate

inst = generate(GenSpec(class_id=1, n=14, due_dist="normal", seed=11))
print(f"{inst.n} items, bin {inst.bin_spec.width}x{inst.bin_spec.height}")

# %%
results = {}
results["baseline-edd"] = edd_solution(inst)

t0 = time.perf_counter()
state = construct(inst, AbhParams())
results["abh"] = state.solution()
print(f"abh: {time.perf_counter() - t0:.2f}s, {state.pack_calls} pack calls, {state.repacks} repacks")

t0 = time.perf_counter()
cph = solve_cph(inst, time_limit=5.0)
results["cph"] = cph.solution
print(f"cph: {time.perf_counter() - t0:.2f}s, {cph.nodes} nodes, status {cph.status}")

# %% [markdown]
# The performance ratio divides each objective by the best one found.

# %%
best = min(sol.objective for sol in results.values())
for name, sol in results.items():
    ratio = sol.objective / best if best > 0 else 1.0
    print(f"{name:13s} objective {sol.objective:10.2f}  bins {sol.bins_used:2d}  "
          f"ratio {ratio:6.3f}  valid {validate(sol, inst).ok}")

# %% [markdown]
# The search log shows how the incumbent improved over time.

# %%
print(cph.trace_csv())
