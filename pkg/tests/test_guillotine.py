import pytest
from hypothesis import given, settings, strategies as st

from jitbp.guillotine import (UNLIMITED, GuillotinePlan, PackBudget, PackStatus, Placement, Region, lower_bound,
                              pack, replay, split, used_with_item_bound)
from jitbp.model import BatchSequence, Item, Schedule, Solution, make_instance, validate
from oracles import brute_force_pack, set_partitions


def item(w, h, i=1):
    return Item(i, w, h, 0.0, 1.0, 1.0)


def R(x, y, w, h):
    return Region(1, x, y, w, h)


@pytest.mark.parametrize("pattern,top,right", [
    ("H", R(0, 3, 10, 7), R(4, 0, 6, 3)),
    ("V", R(0, 3, 4, 7), R(4, 0, 6, 10)),
])
def test_split_patterns(pattern, top, right):
    assert split(R(0, 0, 10, 10), item(4, 3), pattern) == (top, right)


def test_split_exact_fit_gives_zero_area_residuals():
    top, right = split(R(0, 0, 10, 10), item(10, 10), "H")
    assert top == R(0, 10, 10, 0) and right == R(10, 0, 0, 10)
    assert top.degenerate and right.degenerate


def test_split_rejects_non_fitting_item():
    with pytest.raises(ValueError):
        split(R(0, 0, 3, 3), item(4, 1), "H")


@given(st.integers(1, 30), st.integers(1, 30), st.data(), st.sampled_from("HV"))
def test_split_conserves_area(W, H, data, pattern):
    w = data.draw(st.integers(1, W))
    h = data.draw(st.integers(1, H))
    top, right = split(R(2, 5, W, H), item(w, h), pattern)
    assert top.area + right.area + w * h == W * H


def plan_solution(inst, plan, ids):
    return Solution(BatchSequence((frozenset(ids),)), plan, Schedule((10_000.0,)),
                    sum(inst.item(i).earliness_weight * (10_000.0 - inst.item(i).due_date) for i in ids))


@pytest.mark.parametrize("dims,expected", [
    ([(10, 10)], PackStatus.FEASIBLE),
    ([(7, 7), (4, 4)], PackStatus.INFEASIBLE),
    ([(10, 5), (5, 5), (5, 5)], PackStatus.FEASIBLE),
])
def test_pack_examples(dims, expected):
    inst = make_instance(dims, [0] * len(dims))
    res = pack(inst.ids, inst, UNLIMITED)
    assert res.status is expected
    if res.feasible:
        assert validate(plan_solution(inst, res.plan, inst.ids), inst).ok


def test_pack_empty_set():
    res = pack([], make_instance([(1, 1)], [0]))
    assert res.feasible and len(res.plan) == 0


def test_pack_budget_exhaustion_is_unknown():
    # area 97 of 100, greedy passes fail, the proof of infeasibility takes a few dozen nodes
    inst = make_instance([(3, 7), (3, 8), (6, 5), (7, 2)], [0] * 4)
    assert pack(inst.ids, inst, PackBudget(max_nodes=1, max_seconds=None)).status is PackStatus.UNKNOWN
    assert pack(inst.ids, inst, UNLIMITED).status is PackStatus.INFEASIBLE


def test_pack_hint_not_needed_for_correctness():
    inst = make_instance([(5, 10), (5, 5), (5, 5)], [0, 0, 0])
    hint = GuillotinePlan((Placement(2, 1, 0, 0),))
    assert pack(inst.ids, inst, UNLIMITED, hint=hint).feasible
    assert pack(inst.ids, inst, UNLIMITED).feasible


def test_pack_is_deterministic():
    inst = make_instance([(3, 7), (6, 2), (4, 4), (2, 5), (5, 3)], [0] * 5)
    a = pack(inst.ids, inst, UNLIMITED)
    b = pack(list(reversed(inst.ids)), inst, UNLIMITED)
    assert a.status is b.status
    assert pack(inst.ids, inst, UNLIMITED) == a


def test_replay_recovers_regions():
    inst = make_instance([(10, 5), (5, 5), (5, 5)], [0] * 3)
    res = pack(inst.ids, inst, UNLIMITED)
    regions, unplaced = replay(res.plan, inst)
    assert not unplaced
    for p in res.plan.placements:
        assert (regions[p.item_id].x, regions[p.item_id].y) == (p.x, p.y)


@pytest.mark.parametrize("dims,expected", [
    ([(6, 6)] * 3, 3),
    ([(5, 5)] * 4, 1),
    ([(10, 5), (5, 5), (5, 5)], 1),
])
def test_lower_bound_examples(dims, expected):
    inst = make_instance(dims, [0] * len(dims))
    assert lower_bound(inst.ids, inst) == expected


def test_lower_bound_empty_is_zero():
    assert lower_bound([], make_instance([(1, 1)], [0])) == 0


def test_used_with_item_bound_examples():
    inst = make_instance([(6, 6), (6, 6), (5, 5), (5, 5), (5, 5), (5, 5)], [0] * 6)
    assert used_with_item_bound([1], 2, inst) is False
    assert used_with_item_bound([], 1, inst) is True
    assert used_with_item_bound([3, 4, 5], 6, inst) is True


small_sets = st.lists(st.tuples(st.integers(1, 10), st.integers(1, 10)), min_size=1, max_size=5)


@settings(max_examples=150)
@given(small_sets)
def test_pack_matches_brute_force(dims):
    inst = make_instance(dims, [0] * len(dims))
    res = pack(inst.ids, inst, UNLIMITED)
    assert res.status is not PackStatus.UNKNOWN
    assert res.feasible == brute_force_pack(dims, 10, 10)
    if res.feasible:
        assert validate(plan_solution(inst, res.plan, inst.ids), inst).ok


def optimal_bins(dims, W, H):
    """Fewest bins by brute force: every set partition, each block checked by the packing oracle."""
    best = len(dims)
    for part in set_partitions(list(range(len(dims)))):
        if len(part) < best and all(brute_force_pack([dims[i] for i in b], W, H) for b in part):
            best = len(part)
    return best


@settings(max_examples=60)
@given(small_sets)
def test_lower_bound_never_exceeds_optimum(dims):
    inst = make_instance(dims, [0] * len(dims))
    assert 1 <= lower_bound(inst.ids, inst) <= optimal_bins(dims, 10, 10)


@settings(max_examples=100)
@given(small_sets, st.tuples(st.integers(1, 10), st.integers(1, 10)))
def test_pack_monotone_under_supersets(dims, extra):
    inst = make_instance(dims + [extra], [0] * (len(dims) + 1))
    base = pack(inst.ids[:-1], inst, UNLIMITED)
    if base.status is PackStatus.INFEASIBLE:
        assert not pack(inst.ids, inst, UNLIMITED).feasible
