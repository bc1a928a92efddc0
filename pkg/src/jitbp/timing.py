"""Optimal completion times for a fixed batch sequence.

Writing ``c_k = q_k + u_k`` with ``q_k`` the cumulative processing time, the
machine constraints become ``0 <= u_1 <= u_2 <= ... <= u_m`` (``u_k`` is the
idle time accumulated before batch ``k`` finishes). The objective is separable,
convex and piecewise linear in the ``u_k``, so pooling adjacent violators
(merging consecutive batches into blocks that share one idle value) is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .model import InputError, Instance, batch_processing_time


@dataclass(frozen=True)
class TimingProblem:
    processing_times: tuple[float, ...]
    batch_of: tuple[int, ...]          # per item, 0-based batch position
    due_dates: tuple[float, ...]
    earliness: tuple[float, ...]
    tardiness: tuple[float, ...]

    def __post_init__(self):
        m = len(self.processing_times)
        n = len(self.batch_of)
        if not (len(self.due_dates) == len(self.earliness) == len(self.tardiness) == n):
            raise InputError("per-item arrays differ in length")
        if any(not 0 <= k < m for k in self.batch_of):
            raise InputError("batch index out of range")

    @property
    def m(self) -> int:
        return len(self.processing_times)

    @classmethod
    def from_batches(cls, batches: Sequence[Sequence[int]], instance: Instance) -> TimingProblem:
        p, batch_of, d, e, t = [], [], [], [], []
        for k, batch in enumerate(batches):
            p.append(batch_processing_time(batch, instance))
            for i in batch:
                it = instance.item(i)
                batch_of.append(k)
                d.append(it.due_date)
                e.append(it.earliness_weight)
                t.append(it.tardiness_weight)
        return cls(tuple(p), tuple(batch_of), tuple(d), tuple(e), tuple(t))

    def cost(self, completion_times: Sequence[float]) -> float:
        total = 0.0
        for k, d, e, t in zip(self.batch_of, self.due_dates, self.earliness, self.tardiness):
            c = completion_times[k]
            total += e * max(0.0, d - c) + t * max(0.0, c - d)
        return total


def _smallest_minimizer(kinks: list[tuple[float, float, float]], total_e: float) -> float:
    # right derivative just past kink a is sum(e + t for a' <= a) - total_e
    if total_e <= 0.0:
        return -math.inf
    acc = 0.0
    for a, e, t in kinks:
        acc += e + t
        if acc >= total_e:
            return a
    return kinks[-1][0]  # unreachable with total_e > 0


def _push(blocks: list[list], k: int, kinks: list[tuple[float, float, float]]) -> None:
    # blocks: [first, last, sorted kinks, sum eps, idle value]; never mutated, so copies of the stack can diverge
    kinks = sorted(kinks)
    tot_e = sum(x[1] for x in kinks)
    v = _smallest_minimizer(kinks, tot_e)
    if k == 0:
        v = max(v, 0.0)
    block = [k, k, kinks, tot_e, v]
    while blocks and blocks[-1][4] > block[4]:
        prev = blocks.pop()
        kinks = sorted(prev[2] + block[2])
        tot_e = prev[3] + block[3]
        v = _smallest_minimizer(kinks, tot_e)
        if prev[0] == 0:
            v = max(v, 0.0)
        block = [prev[0], block[1], kinks, tot_e, v]
    blocks.append(block)


def _pool(per_batch: list[list[tuple[float, float, float]]]) -> list[float]:
    """Idle values ``u_k`` from per-batch kinks ``(d - q_k, eps, tau)``."""
    blocks: list[list] = []
    for k, kinks in enumerate(per_batch):
        _push(blocks, k, kinks)
    u = [0.0] * len(per_batch)
    for first, last, _, _, v in blocks:
        for k in range(first, last + 1):
            u[k] = v
    return u


@dataclass(frozen=True)
class PoolState:
    """Pooled blocks after a prefix of batches; extend it to price many suffixes."""

    blocks: tuple = ()
    q: float = 0.0
    count: int = 0

    def extended(self, batches: Sequence[Sequence[int]], instance: Instance) -> PoolState:
        """Pool further batches (empty ones skipped)."""
        terms = instance.timing_terms
        load = instance.timing.load_time
        blocks = list(self.blocks)
        q, count = self.q, self.count
        for b in batches:
            if not b:
                continue
            rows = [terms[i] for i in b]
            q += load + sum(r[0] for r in rows)
            _push(blocks, count, [(d - q, e, t) for _, d, e, t in rows])
            count += 1
        return PoolState(tuple(blocks), q, count)

    @property
    def penalty(self) -> float:
        cost = 0.0
        for _, _, kinks, _, v in self.blocks:
            for a, e, t in kinks:
                cost += e * (a - v) if a > v else t * (v - a)
        return cost


def optimal_schedule(problem: TimingProblem) -> tuple[list[float], float]:
    """Completion times minimising total weighted earliness-tardiness.

    Among optimal schedules the componentwise earliest one is returned.
    """
    m = problem.m
    if m == 0:
        raise InputError("timing problem has no batches")
    q = list(itertools.accumulate(problem.processing_times))
    per_batch: list[list[tuple[float, float, float]]] = [[] for _ in range(m)]
    for k, d, e, t in zip(problem.batch_of, problem.due_dates, problem.earliness, problem.tardiness):
        per_batch[k].append((d - q[k], e, t))
    u = _pool(per_batch)
    completion = [qk + uk for qk, uk in zip(q, u)]
    return completion, problem.cost(completion)


def sequence_penalty(batches: Sequence[Sequence[int]], instance: Instance) -> float:
    """Optimal penalty of a batch sequence (empty batches skipped, none at all gives 0)."""
    return PoolState().extended(batches, instance).penalty


def schedule_batches(batches: Sequence[Sequence[int]], instance: Instance) -> tuple[list[float], float]:
    """optimal_schedule for a sequence of item-id batches (empty batches not allowed)."""
    return optimal_schedule(TimingProblem.from_batches(batches, instance))


def wet(batches: Sequence[Sequence[int]], item_id: int, batch_index: int, instance: Instance) -> float:
    """Optimal penalty of the partial solution with ``item_id`` tentatively added to a batch.

    ``batches`` holds the items placed so far (items elsewhere contribute
    nothing); ``batch_index`` is 0-based. Empty batches take no machine time
    and are skipped unless they receive the candidate.
    """
    seq = [list(b) + [item_id] if k == batch_index else b for k, b in enumerate(batches)]
    return sequence_penalty(seq, instance)
