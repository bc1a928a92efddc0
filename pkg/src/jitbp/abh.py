"""ABH: agent-based construction of a packing and batch schedule.

Bins and unpacked items negotiate: a bin offers a place to the item that
would least increase the partial penalty (``group_formation``), and the item
accepts unless a bin closer to its ideal processing window, or one giving a
lower penalty, could take it (``group_join``). When no bin can attract any
item, neighbouring bins are emptied and a fresh bin is inserted (``repack``).
A neighbouring-bin local search runs after every successful attachment.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cp_search import build_solution, edd_solution
from .guillotine import (DEFAULT_BUDGET, GuillotinePlan, PackBudget, PackResult, PackStatus, lower_bound, pack,
                         used_with_item_bound)
from .model import Instance, Solution, batch_processing_time, item_penalty
from .timing import PoolState, TimingProblem, optimal_schedule, wet

log = logging.getLogger(__name__)

UNKNOWN = -1
INFEASIBLE = 0
FEASIBLE = 1
EPS = 1e-9


@dataclass(frozen=True)
class AbhParams:
    peak_width: float = 40.0
    candidate_count: int = 3
    pack_budget: PackBudget = DEFAULT_BUDGET
    seed: int = 0
    caching: bool = True

    def __post_init__(self):
        if self.peak_width <= 0:
            raise ValueError("peak_width must be positive")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")


def peak_cluster(due_dates: Mapping[int, float] | Sequence[float], r: float, m: int) -> list[int]:
    """Pick ``m`` bottleneck items, one per due-date cluster, strongest peak first.

    ``due_dates`` maps item id to due date; a plain sequence is read as ids
    ``1..n``. Ties go to the smallest id.
    """
    if not isinstance(due_dates, Mapping):
        due_dates = {k + 1: d for k, d in enumerate(due_dates)}
    ids = np.array(sorted(due_dates))
    if m > len(ids):
        raise ValueError("cannot pick more bottleneck items than there are items")
    d = np.array([due_dates[i] for i in ids], dtype=float)
    kernel = np.exp(-((d[:, None] - d[None, :]) ** 2) / (0.5 * r) ** 2)
    phi = kernel.sum(axis=1)
    alive = np.ones(len(ids), dtype=bool)
    chosen: list[int] = []
    for _ in range(m):
        masked = np.where(alive, phi, -np.inf)
        j = int(np.argmax(masked))
        chosen.append(int(ids[j]))
        alive[j] = False
        phi = phi - phi[j] * kernel[:, j]
    return chosen


@dataclass
class NegotiationState:
    """Working state of one ABH run.

    ``feas`` (Λ) and ``penalty`` (A) are m-by-n caches with ``-1`` meaning
    unknown. Columns follow the order of ``instance.items``.
    """

    instance: Instance
    params: AbhParams
    unpacked: list[int]
    bins: list[list[int]]
    plans: list[GuillotinePlan]
    completion: list[float] = field(default_factory=list)
    proc: list[float] = field(default_factory=list)
    feas: np.ndarray = None
    penalty: np.ndarray = None
    plan_cache: dict = field(default_factory=dict)
    versions: list[int] = field(default_factory=list)
    feas_version: dict = field(default_factory=dict)
    ls_memo: dict = field(default_factory=dict)
    infeasible: set = field(default_factory=set)
    stale_reads: int = 0
    pack_calls: int = 0
    pack_unknown: int = 0
    wet_calls: int = 0
    repacks: int = 0
    events: list[tuple] = field(default_factory=list)
    t0: float = field(default_factory=time.perf_counter)

    def __post_init__(self):
        self.col = {it.id: a for a, it in enumerate(self.instance.items)}
        self.unpacked = self._edd(self.unpacked)
        self.versions = [0] * len(self.bins)
        self.reset_caches()
        self.retime()

    # -- bookkeeping -------------------------------------------------------

    def _edd(self, ids) -> list[int]:
        item = self.instance.item
        return sorted(ids, key=lambda i: (item(i).due_date, i))

    @property
    def m(self) -> int:
        return len(self.bins)

    @property
    def packed(self) -> list[int]:
        return [i for b in self.bins for i in b]

    def reset_caches(self) -> None:
        shape = (len(self.bins), self.instance.n)
        self.feas = np.full(shape, UNKNOWN, dtype=np.int8)
        self.penalty = np.full(shape, -1.0)
        self.plan_cache.clear()
        self.feas_version.clear()

    def bin_changed(self, k: int) -> None:
        self.versions[k] += 1
        self.feas[k, :] = UNKNOWN
        self.penalty[:, :] = -1.0
        for key in [key for key in self.plan_cache if key[0] == k]:
            del self.plan_cache[key]

    def retime(self) -> None:
        """Optimal completion times of the non-empty bins; an empty bin sits at its predecessor's time."""
        nonempty = [k for k, b in enumerate(self.bins) if b]
        self.proc = [batch_processing_time(b, self.instance) for b in self.bins]
        self.completion = [0.0] * self.m
        if not nonempty:
            self.objective = 0.0
            return
        prob = TimingProblem.from_batches([self.bins[k] for k in nonempty], self.instance)
        times, self.objective = optimal_schedule(prob)
        c = dict(zip(nonempty, times))
        last = 0.0
        for k in range(self.m):
            last = c.get(k, last)
            self.completion[k] = last

    def log_event(self, event: str, k, i) -> None:
        self.events.append((event, k, i, self.objective, time.perf_counter() - self.t0))

    def trace_csv(self) -> str:
        lines = ["event,bin,item,objective,elapsed_s"]
        for ev, k, i, obj, t in self.events:
            lines.append(f"{ev},{'' if k is None else k + 1},{'' if i is None else i},{obj!r},{t:.6f}")
        return "\n".join(lines) + "\n"

    # -- cached evaluations ------------------------------------------------

    def proven_infeasible(self, key: frozenset) -> bool:
        """True if ``key`` or a set one item smaller was proven not to fit one bin."""
        if key in self.infeasible:
            return True
        return any((key - {j}) in self.infeasible for j in key)

    def wet(self, i: int, k: int) -> float:
        """Penalty of the packed items plus ``i`` if ``i`` joined bin ``k`` (cached in A)."""
        a = self.col[i]
        if self.params.caching and self.penalty[k, a] >= 0:
            return float(self.penalty[k, a])
        self.wet_calls += 1
        val = wet(self.bins, i, k, self.instance)
        self.penalty[k, a] = val
        return val

    def packable(self, i: int, k: int) -> bool:
        """Bin lower bound then PACK for ``bins[k] + [i]``; a PACK result is cached in Λ."""
        if not used_with_item_bound(self.bins[k], i, self.instance):
            return False
        a = self.col[i]
        if self.params.caching and self.feas[k, a] != UNKNOWN:
            if self.feas_version.get((k, i)) != self.versions[k]:
                self.stale_reads += 1
            return self.feas[k, a] == FEASIBLE
        key = frozenset(self.bins[k]) | {i}
        if self.params.caching and self.proven_infeasible(key):
            # a proof holds for every superset and whatever plan the bin has
            self.feas[k, a] = INFEASIBLE
            self.feas_version[(k, i)] = self.versions[k]
            return False
        self.pack_calls += 1
        res = pack(self.bins[k] + [i], self.instance, self.params.pack_budget, hint=self.plans[k])
        if res.status is PackStatus.UNKNOWN:
            self.pack_unknown += 1
        elif res.status is PackStatus.INFEASIBLE:
            self.infeasible.add(key)
        self.feas[k, a] = FEASIBLE if res.feasible else INFEASIBLE
        self.feas_version[(k, i)] = self.versions[k]
        if res.feasible:
            self.plan_cache[(k, i)] = res.plan
        return res.feasible

    def attach(self, i: int, k: int) -> None:
        plan = self.plan_cache.get((k, i))
        if plan is None:
            plan = pack(self.bins[k] + [i], self.instance, self.params.pack_budget, hint=self.plans[k]).plan
        self.bins[k].append(i)
        self.plans[k] = plan
        self.unpacked.remove(i)
        self.bin_changed(k)
        self.retime()

    def solution(self) -> Solution:
        return build_solution(self.bins, self.plans, self.instance)


def initial_partial_solution(instance: Instance, params: AbhParams = AbhParams()) -> NegotiationState:
    """Seed ``lower_bound(N)`` bins with one bottleneck item each, in due-date order."""
    m = lower_bound(instance.ids, instance)
    seeds = peak_cluster({it.id: it.due_date for it in instance.items}, params.peak_width, m)
    seeds.sort(key=lambda i: (instance.item(i).due_date, i))
    plans = [pack([i], instance, params.pack_budget).plan for i in seeds]
    rest = [i for i in instance.ids if i not in set(seeds)]
    return NegotiationState(instance, params, rest, [[i] for i in seeds], plans)


def group_formation(k: int, state: NegotiationState) -> bool:
    """Bin ``k`` tries to attract one unpacked item; True when one joined."""
    inst = state.instance
    ck = state.completion[k]
    ranked = sorted(state.unpacked, key=lambda i: (item_penalty(inst.item(i), ck), i))
    rank = {i: a for a, i in enumerate(ranked)}
    gamma = ranked[:state.params.candidate_count]
    delta: set[int] = set()
    while True:
        alpha = {i: state.wet(i, k) for i in gamma}
        best = min(gamma, key=lambda i: (alpha[i], rank[i]))
        if state.packable(best, k) and group_join(best, k, state):
            state.attach(best, k)
            state.log_event("form-success", k, best)
            return True
        delta.add(best)
        gamma.remove(best)
        if not gamma:
            if len(delta) == len(state.unpacked):
                return False
            gamma = [i for i in ranked if i not in delta]


def _overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    return min(a1, b1) - max(a0, b0)


def group_join(i: int, k: int, state: NegotiationState) -> bool:
    """Item ``i`` answers an offer from bin ``k``: False if a better bin could take it."""
    it = state.instance.item(i)
    p_i = batch_processing_time([i], state.instance)
    lo, hi = it.due_date - p_i, it.due_date
    windows = []
    for kk in range(state.m):
        ov = _overlap(lo, hi, state.completion[kk] - state.proc[kk], state.completion[kk])
        if ov >= 0:
            windows.append((-ov, kk))
    windows.sort()
    close = [kk for _, kk in windows]
    for kk in close:
        if kk == k:
            return True
        if state.packable(i, kk):
            state.log_event("join-decline", k, i)
            return False
    others = [kk for kk in range(state.m) if kk not in set(close)]
    alpha = {kk: state.wet(i, kk) for kk in others}
    ref = alpha[k]
    better = sorted((kk for kk in others if alpha[kk] <= ref), key=lambda kk: (alpha[kk], kk))
    for kk in better:
        if kk == k:
            return True
        if state.packable(i, kk):
            state.log_event("join-decline", k, i)
            return False
    return True


def _moves(a: list[int], b: list[int]):
    for i in a:
        yield [x for x in a if x != i], b + [i], i
    for j in b:
        yield a + [j], [x for x in b if x != j], j
    for i in a:
        for j in b:
            yield [x for x in a if x != i] + [j], [x for x in b if x != j] + [i], (i, j)


def _ls_pack(state: NegotiationState, items: list[int]) -> PackResult:
    # local search re-tests the same bin contents after every applied move;
    # no hint, so the result depends on the item set alone and memoising it is exact
    key = frozenset(items)
    caching = state.params.caching
    res = state.ls_memo.get(key) if caching else None
    if res is None and caching and state.proven_infeasible(key):
        res = state.ls_memo[key] = PackResult(PackStatus.INFEASIBLE)
    if res is None and lower_bound(items, state.instance) > 1:
        res = state.ls_memo[key] = PackResult(PackStatus.INFEASIBLE)
    if res is None:
        state.pack_calls += 1
        res = state.ls_memo[key] = pack(items, state.instance, state.params.pack_budget)
        if res.status is PackStatus.UNKNOWN:
            state.pack_unknown += 1
        elif res.status is PackStatus.INFEASIBLE:
            state.infeasible.add(key)
    return res


def _known_infeasible(state: NegotiationState, a: list[int], b: list[int]) -> bool:
    for items in (a, b):
        key = frozenset(items)
        if key in state.infeasible:
            return True
        res = state.ls_memo.get(key)
        if res is not None and not res.feasible:
            return True
    return False


def local_search(state: NegotiationState) -> NegotiationState:
    """First-improvement insertion/swap moves between neighbouring bins until a sweep finds none."""
    inst = state.instance
    while True:
        improved = False
        k = 0
        while k < state.m - 1:
            current = state.objective
            applied = False
            head = PoolState().extended(state.bins[:k], inst)
            tail = state.bins[k + 2:]
            for new_a, new_b, moved in _moves(state.bins[k], state.bins[k + 1]):
                if state.params.caching and _known_infeasible(state, new_a, new_b):
                    continue
                if head.extended([new_a, new_b, *tail], inst).penalty >= current - EPS:
                    continue
                # the bin that gains an item is the likely failure, test it first
                grow_b = len(new_b) >= len(state.bins[k + 1])
                first, second = (new_b, new_a) if grow_b else (new_a, new_b)
                r1 = _ls_pack(state, first)
                if not r1.feasible:
                    continue
                r2 = _ls_pack(state, second)
                if not r2.feasible:
                    continue
                ra, rb = (r2, r1) if grow_b else (r1, r2)
                state.bins[k], state.bins[k + 1] = new_a, new_b
                state.plans[k], state.plans[k + 1] = ra.plan, rb.plan
                state.bin_changed(k)
                state.bin_changed(k + 1)
                state.retime()
                state.log_event("local-improve", k, moved if isinstance(moved, int) else moved[0])
                applied = True
                break
            if applied:
                improved = True
            else:
                k += 1
        if not improved:
            return state


def repack(state: NegotiationState) -> NegotiationState:
    """Empty the bin closest in time to the first unpacked item and its neighbours; add a bin after it."""
    first = state.unpacked[0]
    d = state.instance.item(first).due_date
    kstar = min(range(state.m), key=lambda k: (abs(state.completion[k] - d), k))
    freed = []
    for k in (kstar - 1, kstar, kstar + 1):
        if 0 <= k < state.m:
            freed.extend(state.bins[k])
            state.bins[k] = []
            state.plans[k] = GuillotinePlan()
    state.bins.insert(kstar + 1, [])
    state.plans.insert(kstar + 1, GuillotinePlan())
    state.versions.insert(kstar + 1, 0)
    for k in range(state.m):
        state.versions[k] += 1
    state.unpacked = state._edd(state.unpacked + freed)
    state.repacks += 1
    state.reset_caches()
    state.retime()
    state.log_event("repack", kstar, first)
    return state


def _fallback(state: NegotiationState) -> None:
    # give every leftover item its own bin, next to the bin closest to its due date
    for i in list(state.unpacked):
        d = state.instance.item(i).due_date
        k = min(range(state.m), key=lambda k: (abs(state.completion[k] - d), k)) if state.m else -1
        state.bins.insert(k + 1, [i])
        state.plans.insert(k + 1, pack([i], state.instance).plan)
        state.versions.insert(k + 1, 0)
        state.unpacked.remove(i)
        state.reset_caches()
        state.retime()


def construct(instance: Instance, params: AbhParams = AbhParams()) -> NegotiationState:
    """Negotiate until every item is packed; returns the final state."""
    state = initial_partial_solution(instance, params)
    max_repacks = 4 * instance.n
    while state.unpacked:
        success = False
        for k in range(state.m):
            if not state.unpacked:
                break
            if group_formation(k, state):
                success = True
                local_search(state)
        if state.unpacked and not success:
            if state.repacks >= max_repacks:
                log.warning("repack limit reached with %d items left; opening single bins",
                            len(state.unpacked))
                _fallback(state)
                break
            repack(state)
    return state


def run(instance: Instance, params: AbhParams = AbhParams()) -> Solution:
    return construct(instance, params).solution()


edd_baseline = edd_solution
