"""Core domain types, batch processing time, objective evaluation and validation.

Geometry is integral (item and bin sizes, placement coordinates); times,
weights and completion times are floats.
"""

from __future__ import annotations

import json
import math
from functools import cached_property
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .guillotine import GuillotinePlan


class InputError(ValueError):
    """Malformed or inconsistent problem data."""


@dataclass(frozen=True)
class Item:
    id: int
    width: int
    height: int
    due_date: float
    earliness_weight: float
    tardiness_weight: float

    def __post_init__(self):
        if self.id < 1:
            raise InputError(f"item id must be >= 1, got {self.id}")
        if self.width < 1 or self.height < 1:
            raise InputError(f"item {self.id}: dimensions must be >= 1")
        if self.due_date < 0:
            raise InputError(f"item {self.id}: negative due date")
        if self.earliness_weight < 0 or self.tardiness_weight < 0:
            raise InputError(f"item {self.id}: negative penalty weight")

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class BinSpec:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InputError("bin dimensions must be >= 1")

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class TimingParams:
    """Processing time f(S) = load + handle*|S| + cut*sum(w+h)."""

    load_time: float = 100.0
    handle_time: float = 30.0
    cut_time: float = 0.02

    def __post_init__(self):
        if min(self.load_time, self.handle_time, self.cut_time) < 0:
            raise InputError("timing parameters must be non-negative")


@dataclass(frozen=True)
class Instance:
    items: tuple[Item, ...]
    bin_spec: BinSpec
    timing: TimingParams = TimingParams()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise InputError("instance needs at least one item")
        index = {}
        for it in self.items:
            if it.id in index:
                raise InputError(f"duplicate item id {it.id}")
            if it.width > self.bin_spec.width or it.height > self.bin_spec.height:
                raise InputError(f"item {it.id} does not fit an empty bin")
            index[it.id] = it
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[int]:
        return [it.id for it in self.items]

    def item(self, item_id: int) -> Item:
        try:
            return self._index[item_id]
        except KeyError:
            raise InputError(f"unknown item id {item_id}") from None

    def __contains__(self, item_id) -> bool:
        return item_id in self._index

    @cached_property
    def timing_terms(self) -> dict[int, tuple[float, float, float, float]]:
        """Per item: machine time it adds to a batch, due date, earliness and tardiness weight."""
        t = self.timing
        return {it.id: (t.handle_time + t.cut_time * (it.width + it.height), it.due_date,
                        it.earliness_weight, it.tardiness_weight) for it in self.items}


@dataclass(frozen=True)
class BatchSequence:
    """Ordered partition of item ids; position k is the k-th bin on the machine."""

    batches: tuple[frozenset[int], ...]

    def __post_init__(self):
        batches = tuple(frozenset(b) for b in self.batches)
        object.__setattr__(self, "batches", batches)
        seen: set[int] = set()
        for k, b in enumerate(batches, start=1):
            if not b:
                raise InputError(f"batch {k} is empty")
            if seen & b:
                raise InputError(f"batch {k} repeats items {sorted(seen & b)}")
            seen |= b

    def __len__(self) -> int:
        return len(self.batches)

    def __iter__(self):
        return iter(self.batches)

    def batch_of(self) -> dict[int, int]:
        """Map item id -> 0-based batch position."""
        return {i: k for k, b in enumerate(self.batches) for i in b}

    def covers(self, instance: Instance) -> bool:
        return set().union(*self.batches) == set(instance.ids)


@dataclass(frozen=True)
class Schedule:
    completion_times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "completion_times", tuple(float(c) for c in self.completion_times))

    def __len__(self) -> int:
        return len(self.completion_times)


@dataclass(frozen=True)
class Solution:
    batch_sequence: BatchSequence
    plan: GuillotinePlan
    schedule: Schedule
    objective: float

    @property
    def bins_used(self) -> int:
        return len(self.batch_sequence)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.violations)


def batch_processing_time(item_ids: Iterable[int], instance: Instance) -> float:
    ids = list(item_ids)
    if not ids:
        return 0.0
    t = instance.timing
    perimeter = 0
    for i in ids:
        it = instance.item(i)
        perimeter += it.width + it.height
    return t.load_time + t.handle_time * len(ids) + t.cut_time * perimeter


def item_penalty(item: Item, completion: float) -> float:
    return (item.earliness_weight * max(0.0, item.due_date - completion)
            + item.tardiness_weight * max(0.0, completion - item.due_date))


def evaluate(batch_sequence: BatchSequence, schedule: Schedule, instance: Instance) -> float:
    if len(batch_sequence) != len(schedule):
        raise InputError(
            f"{len(batch_sequence)} batches but {len(schedule)} completion times")
    total = 0.0
    for batch, c in zip(batch_sequence.batches, schedule.completion_times):
        for i in batch:
            total += item_penalty(instance.item(i), c)
    return total


def validate(solution: Solution, instance: Instance, objective_tol: float = 1e-9) -> ValidationReport:
    """Check partition, geometry, machine constraints and the reported objective.

    Never raises on bad solutions; every problem becomes a violation string.
    """
    from .guillotine import replay

    report = ValidationReport()
    v = report.violations
    batches = solution.batch_sequence.batches

    seen: dict[int, int] = {}
    for k, batch in enumerate(batches, start=1):
        if not batch:
            v.append(f"empty-batch({k})")
        for i in sorted(batch):
            if i not in instance:
                v.append(f"unknown-item({i})")
            elif i in seen:
                v.append(f"duplicate-item({i})")
            else:
                seen[i] = k
    for i in instance.ids:
        if i not in seen:
            v.append(f"missing-item({i})")

    # geometry
    placements = {}
    for p in solution.plan.placements:
        if p.item_id in placements:
            v.append(f"duplicate-placement({p.item_id})")
            continue
        placements[p.item_id] = p
    for i, k in seen.items():
        p = placements.get(i)
        if p is None:
            v.append(f"missing-placement({i})")
        elif p.bin_index != k:
            v.append(f"plan-bin-mismatch({i},{p.bin_index},{k})")
    for i in placements:
        if i not in seen and i in instance:
            v.append(f"unbatched-placement({i})")

    W, H = instance.bin_spec.width, instance.bin_spec.height
    by_bin: dict[int, list] = {}
    for p in placements.values():
        if p.item_id not in instance:
            continue
        it = instance.item(p.item_id)
        if p.x < 0 or p.y < 0 or p.x + it.width > W or p.y + it.height > H:
            v.append(f"outside-bin({p.item_id},{p.bin_index})")
        by_bin.setdefault(p.bin_index, []).append((p, it))
    for b, group in sorted(by_bin.items()):
        group.sort(key=lambda t: t[0].item_id)
        for a in range(len(group)):
            pa, ia = group[a]
            for c in range(a + 1, len(group)):
                pc, ic = group[c]
                if (pa.x < pc.x + ic.width and pc.x < pa.x + ia.width
                        and pa.y < pc.y + ic.height and pc.y < pa.y + ia.height):
                    v.append(f"overlap({pa.item_id},{pc.item_id},{b})")
    _, unplaced = replay(solution.plan, instance)
    for i, b in unplaced:
        v.append(f"not-guillotine({i},{b})")

    # machine
    cs = solution.schedule.completion_times
    if len(cs) != len(batches):
        v.append(f"schedule-length({len(cs)},{len(batches)})")
        return report
    ps = [batch_processing_time([i for i in b if i in instance], instance) for b in batches]
    if cs and cs[0] < ps[0] - 1e-9:
        v.append("start-before-zero(1)")
    for k in range(1, len(cs)):
        if cs[k] - ps[k] < cs[k - 1] - 1e-9:
            v.append(f"machine-overlap({k},{k + 1})")

    if not any(s.startswith(("unknown-item", "empty-batch", "duplicate-item")) for s in v):
        recomputed = evaluate(solution.batch_sequence, solution.schedule, instance)
        if not math.isclose(recomputed, solution.objective, rel_tol=objective_tol, abs_tol=objective_tol):
            v.append(f"objective-mismatch({solution.objective!r},{recomputed!r})")
    return report


# ----------------------------------------------------------------------
# JSON file formats
# ----------------------------------------------------------------------

def _check_keys(obj: Mapping, allowed: set[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise InputError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise InputError(f"{where}: unknown fields {sorted(extra)}")
    missing = allowed - set(obj)
    if missing:
        raise InputError(f"{where}: missing fields {sorted(missing)}")


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where}: expected a number")
    return x


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InputError(f"{where}: expected an integer")
    return x


def instance_to_dict(instance: Instance) -> dict:
    t = instance.timing
    return {
        "bin": {"width": instance.bin_spec.width, "height": instance.bin_spec.height},
        "timing": {"load": t.load_time, "handle": t.handle_time, "cut": t.cut_time},
        "items": [
            {"id": it.id, "w": it.width, "h": it.height, "due": it.due_date,
             "e": it.earliness_weight, "t": it.tardiness_weight}
            for it in instance.items
        ],
    }


def instance_from_dict(data: Mapping) -> Instance:
    _check_keys(data, {"bin", "timing", "items"}, "instance")
    _check_keys(data["bin"], {"width", "height"}, "bin")
    _check_keys(data["timing"], {"load", "handle", "cut"}, "timing")
    bin_spec = BinSpec(_int(data["bin"]["width"], "bin.width"), _int(data["bin"]["height"], "bin.height"))
    tm = data["timing"]
    timing = TimingParams(_num(tm["load"], "timing.load"), _num(tm["handle"], "timing.handle"),
                          _num(tm["cut"], "timing.cut"))
    if not isinstance(data["items"], list):
        raise InputError("items: expected a list")
    items = []
    for k, d in enumerate(data["items"]):
        where = f"items[{k}]"
        _check_keys(d, {"id", "w", "h", "due", "e", "t"}, where)
        items.append(Item(_int(d["id"], where + ".id"), _int(d["w"], where + ".w"), _int(d["h"], where + ".h"),
                          _num(d["due"], where + ".due"), _num(d["e"], where + ".e"), _num(d["t"], where + ".t")))
    return Instance(tuple(items), bin_spec, timing)


def solution_to_dict(solution: Solution) -> dict:
    return {
        "batches": [sorted(b) for b in solution.batch_sequence.batches],
        "completion_times": list(solution.schedule.completion_times),
        "placements": [
            {"id": p.item_id, "bin": p.bin_index, "x": p.x, "y": p.y, "pattern": p.pattern}
            for p in sorted(solution.plan.placements, key=lambda p: (p.bin_index, p.item_id))
        ],
        "objective": solution.objective,
    }


def solution_from_dict(data: Mapping) -> Solution:
    from .guillotine import GuillotinePlan, Placement

    _check_keys(data, {"batches", "completion_times", "placements", "objective"}, "solution")
    try:
        batches = BatchSequence(tuple(frozenset(_int(i, "batches") for i in b) for b in data["batches"]))
    except TypeError:
        raise InputError("batches: expected a list of id lists") from None
    times = Schedule(tuple(_num(c, "completion_times") for c in data["completion_times"]))
    placements = []
    for k, d in enumerate(data["placements"]):
        where = f"placements[{k}]"
        _check_keys(d, {"id", "bin", "x", "y", "pattern"}, where)
        if d["pattern"] not in ("H", "V"):
            raise InputError(f"{where}.pattern must be 'H' or 'V'")
        placements.append(Placement(_int(d["id"], where), _int(d["bin"], where), _int(d["x"], where),
                                    _int(d["y"], where), d["pattern"]))
    return Solution(batches, GuillotinePlan(tuple(placements)), times, _num(data["objective"], "objective"))


def _dump(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def _load(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def save_instance(instance: Instance, path) -> None:
    _dump(instance_to_dict(instance), path)


def load_instance(path) -> Instance:
    return instance_from_dict(_load(path))


def save_solution(solution: Solution, path) -> None:
    _dump(solution_to_dict(solution), path)


def load_solution(path) -> Solution:
    return solution_from_dict(_load(path))


def make_instance(dims: Sequence[tuple[int, int]], due_dates: Sequence[float], bin_size=(10, 10),
                  earliness: Sequence[float] | None = None, tardiness: Sequence[float] | None = None,
                  timing: TimingParams = TimingParams()) -> Instance:
    """Convenience constructor; ids are assigned 1..n in order."""
    n = len(dims)
    earliness = earliness if earliness is not None else [1.0] * n
    tardiness = tardiness if tardiness is not None else [1.0] * n
    items = tuple(Item(k + 1, w, h, d, e, t)
                  for k, ((w, h), d, e, t) in enumerate(zip(dims, due_dates, earliness, tardiness)))
    return Instance(items, BinSpec(*bin_size), timing)
