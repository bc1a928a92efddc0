"""CPH: depth-first branch-and-bound over item-to-bin assignments.

Items are assigned in ascending due-date order. An item either joins one of
the bins opened so far or opens a new bin at any position of the machine
sequence; bins therefore always form a non-empty prefix of the ``n`` bin
slots, and every ordered partition is reached by exactly one path. Packing
feasibility of a bin is settled by extending its current region tree or,
failing that, by a complete ``pack`` search. The bound at a node is the
optimal timing penalty of the items already assigned.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .guillotine import UNLIMITED, GuillotinePlan, PackBudget, PackStatus, lower_bound, pack, replay, split
from .model import BatchSequence, Instance, Schedule, Solution
from .timing import schedule_batches

log = logging.getLogger(__name__)

RESTART_BASE = 1000
RESTART_FACTOR = 1.5
IMPROVEMENT_EPS = 1e-9


@dataclass
class SearchNode:
    bins: list[list[int]] = field(default_factory=list)
    plans: list[GuillotinePlan] = field(default_factory=list)
    assigned: int = 0
    bound: float = 0.0

    def occupancy(self, n: int) -> list[int]:
        """Item count of each of the ``n`` bin slots (unused slots are 0)."""
        counts = [len(b) for b in self.bins]
        return counts + [0] * (n - len(counts))


def lower_bound_partial(node: SearchNode, instance: Instance) -> float:
    """Optimal penalty of the assigned items in their current bins and sequence."""
    if not node.bins:
        return 0.0
    return schedule_batches(node.bins, instance)[1]


def region_model(node: SearchNode, instance: Instance) -> dict:
    """Region-table view of a node, indexed as in the 3n-region model.

    Regions ``1..n`` are the bin roots, ``n+i`` the top residual of item
    ``i`` and ``2n+i`` its right residual (items numbered by position in
    ``instance.items``). Returns ``e`` (item -> region), ``r`` (region ->
    item), ``v`` (item -> 0 for H, 1 for V) and ``s`` (region -> bin).
    """
    n = instance.n
    pos = {it.id: a + 1 for a, it in enumerate(instance.items)}
    e, r, v, s = {}, {}, {}, {}
    for k, plan in enumerate(node.plans, start=1):
        plan = plan.with_bin(k)
        regions, _ = replay(plan, instance)
        pattern = {p.item_id: p.pattern for p in plan.placements}
        # region of each item is either the root or a residual of another item
        owner = {}
        for i, reg in regions.items():
            top, right = split(reg, instance.item(i), pattern[i])
            owner[(top.x, top.y)] = n + pos[i]
            owner[(right.x, right.y)] = 2 * n + pos[i]
            s[n + pos[i]] = s[2 * n + pos[i]] = k
        for i, reg in regions.items():
            j = k if (reg.x, reg.y) == (0, 0) else owner[(reg.x, reg.y)]
            e[pos[i]] = j
            r[j] = pos[i]
            v[pos[i]] = 0 if pattern[i] == "H" else 1
        s[k] = k
    return {"e": e, "r": r, "v": v, "s": s}


@dataclass
class SolveResult:
    solution: Solution
    status: str                    # "optimal" | "feasible" | "none"
    nodes: int
    trace: list[tuple[float, int, float]]

    def trace_csv(self) -> str:
        lines = ["elapsed_s,node_count,objective"]
        lines += [f"{t:.6f},{k},{obj!r}" for t, k, obj in self.trace]
        return "\n".join(lines) + "\n"


class _Stop(Exception):
    """Node limit of the current restart or the global time limit was hit."""


def edd_solution(instance: Instance) -> Solution:
    """One item per bin, bins in due-date order, optimally timed."""
    order = sorted(instance.items, key=lambda it: (it.due_date, it.id))
    bins = [[it.id] for it in order]
    plans = [pack(b, instance, UNLIMITED).plan for b in bins]
    return build_solution(bins, plans, instance)


def build_solution(bins, plans, instance: Instance) -> Solution:
    keep = [(b, p) for b, p in zip(bins, plans) if b]
    completion, obj = schedule_batches([b for b, _ in keep], instance)
    plan = GuillotinePlan()
    for k, (_, p) in enumerate(keep, start=1):
        plan = plan + p.with_bin(k)
    return Solution(BatchSequence(tuple(frozenset(b) for b, _ in keep)), plan, Schedule(tuple(completion)), obj)


class _Search:
    def __init__(self, instance: Instance, time_limit: float | None, seed: int,
                 on_incumbent: Callable | None, on_node: Callable | None):
        self.inst = instance
        self.order = [it.id for it in sorted(instance.items, key=lambda it: (it.due_date, it.id))]
        self.n = instance.n
        self.min_bins = lower_bound(self.order, instance)
        self.t0 = time.perf_counter()
        self.deadline = None if time_limit is None else self.t0 + time_limit
        self.seed = seed
        self.on_incumbent = on_incumbent
        self.on_node = on_node
        self.nodes = 0
        self.pack_cache: dict[frozenset, tuple[PackStatus, GuillotinePlan | None]] = {}
        self.incomplete = False
        self.trace: list[tuple[float, int, float]] = []
        self.best = edd_solution(instance)
        self.best_value = self.best.objective
        self._record()

    def _record(self):
        entry = (time.perf_counter() - self.t0, self.nodes, self.best_value)
        self.trace.append(entry)
        if self.on_incumbent is not None:
            self.on_incumbent(*entry)

    def _pack(self, items: list[int], hint: GuillotinePlan):
        key = frozenset(items)
        hit = self.pack_cache.get(key)
        if hit is not None:
            return hit
        if lower_bound(items, self.inst) > 1:
            res = (PackStatus.INFEASIBLE, None)
        else:
            if self.deadline is None:
                budget = UNLIMITED
            else:
                budget = PackBudget(None, max(0.0, min(1.0, self.deadline - time.perf_counter())))
            out = pack(items, self.inst, budget, hint=hint)
            res = (out.status, out.plan)
            if out.status is PackStatus.UNKNOWN:
                self.incomplete = True
                return res
        self.pack_cache[key] = res
        return res

    def run(self) -> str:
        restart = 0
        while True:
            limit = int(RESTART_BASE * RESTART_FACTOR ** restart)
            self.rng = random.Random(self.seed * 1_000_003 + restart) if restart else None
            self.node_limit = self.nodes + limit
            self.incomplete = False
            try:
                self._dfs(SearchNode())
            except _Stop:
                if self.deadline is not None and time.perf_counter() >= self.deadline:
                    return "feasible"
                restart += 1
                log.debug("restart %d after %d nodes", restart, self.nodes)
                continue
            return "feasible" if self.incomplete else "optimal"

    def _tick(self, node: SearchNode):
        self.nodes += 1
        if self.on_node is not None:
            self.on_node(node)
        if self.nodes > self.node_limit:
            raise _Stop
        if self.deadline is not None and time.perf_counter() >= self.deadline:
            raise _Stop

    def _children(self, node: SearchNode) -> list[tuple[float, int, SearchNode]]:
        item = self.order[node.assigned]
        out = []
        for k, b in enumerate(node.bins):
            status, plan = self._pack(b + [item], node.plans[k])
            if status is not PackStatus.FEASIBLE:
                continue
            bins = [list(x) for x in node.bins]
            bins[k].append(item)
            plans = list(node.plans)
            plans[k] = plan
            out.append(self._child(bins, plans, node.assigned + 1, (0, k)))
        if len(node.bins) < self.n:
            single = self._pack([item], GuillotinePlan())[1]
            for pos in range(len(node.bins) + 1):
                bins = [list(x) for x in node.bins]
                bins.insert(pos, [item])
                plans = list(node.plans)
                plans.insert(pos, single)
                out.append(self._child(bins, plans, node.assigned + 1, (1, pos)))
        return out

    def _child(self, bins, plans, assigned, tag):
        child = SearchNode(bins, plans, assigned)
        child.bound = lower_bound_partial(child, self.inst)
        return child, tag

    def _dfs(self, node: SearchNode):
        self._tick(node)
        if node.assigned == self.n:
            if node.bound < self.best_value - IMPROVEMENT_EPS:
                self.best = build_solution(node.bins, node.plans, self.inst)
                self.best_value = self.best.objective
                self._record()
            return
        # every remaining item may still open a bin, but not enough to reach the bin lower bound
        if len(node.bins) + (self.n - node.assigned) < self.min_bins:
            return
        kids = [(c.bound, tag, c) for c, tag in self._children(node)]
        if self.rng is not None:
            kids = [(b, self.rng.random(), tag, c) for b, tag, c in kids]
            kids.sort(key=lambda t: (t[0], t[1]))
            kids = [(b, tag, c) for b, _, tag, c in kids]
        else:
            kids.sort(key=lambda t: (t[0], t[1]))
        for bound, _, child in kids:
            if bound >= self.best_value - IMPROVEMENT_EPS:
                break
            self._dfs(child)


def solve(instance: Instance, time_limit: float | None = None, seed: int = 0,
          on_incumbent: Callable[[float, int, float], None] | None = None,
          on_node: Callable[[SearchNode], None] | None = None) -> SolveResult:
    """Best solution found within ``time_limit`` seconds (None: run to completion).

    Status is ``"optimal"`` only when the search tree was exhausted.
    ``on_incumbent(elapsed_s, node_count, objective)`` fires for the initial
    one-item-per-bin solution and for every strict improvement.
    """
    search = _Search(instance, time_limit, seed, on_incumbent, on_node)
    status = search.run()
    return SolveResult(search.best, status, search.nodes, search.trace)
