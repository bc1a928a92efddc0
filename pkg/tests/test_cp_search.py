import random

import pytest

from jitbp.cp_search import SearchNode, edd_solution, lower_bound_partial, region_model, solve
from jitbp.guillotine import UNLIMITED, pack
from jitbp.instgen import GenSpec, generate
from jitbp.model import make_instance, validate
from jitbp.timing import schedule_batches
from oracles import edd_baseline_value, exhaustive_optimum


def tiny(rng, n, side=10, spread=400):
    dims = [(rng.randint(1, side), rng.randint(1, side)) for _ in range(n)]
    return make_instance(dims, [round(rng.uniform(0, spread), 2) for _ in range(n)], bin_size=(side, side),
                         earliness=[rng.randint(1, 5) for _ in range(n)],
                         tardiness=[rng.randint(1, 5) for _ in range(n)])


def test_single_item_is_on_time():
    inst = make_instance([(10, 10)], [200])
    res = solve(inst)
    assert res.status == "optimal"
    assert res.solution.objective == 0
    assert res.solution.schedule.completion_times == (200.0,)
    assert validate(res.solution, inst).ok


def test_conflicting_pair_needs_two_batches():
    inst = make_instance([(7, 7), (4, 4)], [200, 200])
    res = solve(inst)
    assert res.status == "optimal"
    assert res.solution.bins_used == 2
    assert res.solution.objective == pytest.approx(exhaustive_optimum(inst))


def test_pair_sharing_a_bin():
    inst = make_instance([(5, 10), (5, 5)], [200, 200])
    res = solve(inst)
    assert res.solution.bins_used == 1
    assert res.solution.objective == 0


@pytest.mark.parametrize("seed", range(12))
def test_matches_exhaustive_oracle(seed):
    rng = random.Random(seed)
    inst = tiny(rng, rng.randint(2, 4))
    res = solve(inst)
    assert res.status == "optimal"
    assert validate(res.solution, inst).ok
    assert res.solution.objective == pytest.approx(exhaustive_optimum(inst), rel=1e-9, abs=1e-9)


def test_edd_solution_matches_oracle_baseline():
    inst = generate(GenSpec(1, 12, "uniform", 4))
    sol = edd_solution(inst)
    assert validate(sol, inst).ok
    assert sol.bins_used == inst.n
    assert sol.objective == pytest.approx(edd_baseline_value(inst))


def test_tiny_time_limit_returns_baseline():
    inst = generate(GenSpec(1, 20, "normal", 1))
    res = solve(inst, time_limit=0.001)
    assert res.status == "feasible"
    assert validate(res.solution, inst).ok
    assert res.solution.objective <= edd_solution(inst).objective
    assert res.trace[0][2] == pytest.approx(edd_solution(inst).objective)


def test_incumbent_trace_strictly_decreasing():
    inst = tiny(random.Random(3), 4)
    seen = []
    res = solve(inst, on_incumbent=lambda t, k, z: seen.append(z))
    objs = [z for _, _, z in res.trace]
    assert objs == seen
    assert all(b < a for a, b in zip(objs, objs[1:]))
    assert res.trace_csv().splitlines()[0] == "elapsed_s,node_count,objective"


def test_no_empty_bin_before_used_bin():
    for seed in range(5):
        inst = tiny(random.Random(100 + seed), 4)
        bad = []

        def check(node, n=inst.n):
            occ = node.occupancy(n)
            if any(occ[k] == 0 and occ[k + 1] > 0 for k in range(n - 1)):
                bad.append(occ)
        solve(inst, on_node=check)
        assert not bad


def test_same_seed_same_answer():
    inst = generate(GenSpec(5, 8, "uniform", 2))
    a = solve(inst, seed=3)
    b = solve(inst, seed=3)
    assert a.status == b.status == "optimal"
    assert a.solution == b.solution
    assert a.nodes == b.nodes


def test_lower_bound_partial_basics():
    inst = tiny(random.Random(7), 4)
    assert lower_bound_partial(SearchNode(), inst) == 0.0
    res = solve(inst)
    bins = [sorted(b) for b in res.solution.batch_sequence]
    leaf = SearchNode(bins, [], inst.n)
    assert lower_bound_partial(leaf, inst) == pytest.approx(res.solution.objective)


def _restricted(bins, items):
    return tuple(fs for fs in (frozenset(b) & items for b in bins) if fs)


def test_lower_bound_partial_is_admissible():
    # a node's bound never exceeds any leaf reached below it
    rng = random.Random(11)
    for _ in range(4):
        inst = tiny(rng, 4)
        leaves, partial = [], []

        def record(node):
            snap = ([list(b) for b in node.bins], node.bound)
            (leaves if node.assigned == inst.n else partial).append(snap)
        solve(inst, on_node=record)
        checked = 0
        for bins, bound in partial:
            items = frozenset(i for b in bins for i in b)
            below = [z for lbins, z in leaves if _restricted(lbins, items) == _restricted(bins, items)]
            if below:
                checked += 1
                assert bound <= min(below) + 1e-9
        assert checked > 0


def test_region_model_is_consistent():
    inst = make_instance([(5, 10), (5, 5), (5, 5)], [200, 200, 200])
    res = solve(inst)
    plans = []
    for batch in res.solution.batch_sequence:
        plans.append(pack(sorted(batch), inst, UNLIMITED).plan)
    node = SearchNode([sorted(b) for b in res.solution.batch_sequence], plans, inst.n)
    rm = region_model(node, inst)
    n = inst.n
    assert set(rm["e"]) == {1, 2, 3}
    batch = res.solution.batch_sequence.batch_of()
    for i, j in rm["e"].items():
        assert rm["r"][j] == i
        assert j not in (n + i, 2 * n + i)
        assert rm["s"][j] == batch[i] + 1
    for k in range(1, res.solution.bins_used + 1):
        assert rm["s"][k] == k
    assert min(rm["e"].values()) == 1  # some item sits in the root of bin 1


def test_bound_matches_timing_of_assigned_items():
    inst = tiny(random.Random(2), 3)
    node = SearchNode([[1], [2, 3]], [], 3)
    assert lower_bound_partial(node, inst) == pytest.approx(schedule_batches([[1], [2, 3]], inst)[1])
