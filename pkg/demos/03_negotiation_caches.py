# %% [markdown]
# What the negotiation caches buy
#
# The heuristic asks the same questions many times: can bin k take item i,
# and what would the penalty be. With caching on, answers are kept until the
# bin they concern changes. Turning caching off must give the same solution,
# only slower.

# %%
import time

from jitbp import AbhParams, GenSpec, PackBudget, construct, generate

inst = generate(GenSpec(class_id=5, n=40, due_dist="uniform", seed=3))
# a node budget only, so both runs see identical packing answers
budget = PackBudget(max_nodes=20_000, max_seconds=None)

# %%
runs = {}
for caching in (True, False):
    t0 = time.perf_counter()
    state = construct(inst, AbhParams(pack_budget=budget, caching=caching))
    runs[caching] = (state, time.perf_counter() - t0)
    print(f"caching={caching!s:5s} {runs[caching][1]:6.2f}s  pack calls {state.pack_calls:6d}  "
          f"penalty evaluations {state.wet_calls:6d}  objective {state.objective:.2f}")

# %%
same = runs[True][0].solution() == runs[False][0].solution()
print("identical solutions:", same)
print(f"speedup: {runs[False][1] / runs[True][1]:.1f}x")

# %% [markdown]
# The event trace records each accepted offer, each declined one, every
# repack and every local-search improvement.

# %%
trace = runs[True][0].trace_csv().splitlines()
print("\n".join(trace[:8]))
print(f"... {len(trace) - 1} events")
