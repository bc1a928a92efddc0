"""Region-based guillotine packing: region splits, single-bin feasibility search, bin lower bounds.

Every placed item sits at the bottom-left corner of a free region and cuts it
into a top residual and a right residual. Pattern ``"H"`` makes the first cut
horizontal (full-width top strip), pattern ``"V"`` makes it vertical
(full-height right strip). Any layout built this way is guillotine-cuttable.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .model import Instance, InputError, Item

PATTERNS = ("H", "V")


@dataclass(frozen=True)
class Region:
    bin_index: int
    x: int
    y: int
    width: int
    height: int

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def degenerate(self) -> bool:
        return self.width == 0 or self.height == 0

    def fits(self, item: Item) -> bool:
        return item.width <= self.width and item.height <= self.height


@dataclass(frozen=True)
class Placement:
    """Item at the bottom-left corner ``(x, y)`` of a free region of bin ``bin_index``."""

    item_id: int
    bin_index: int
    x: int
    y: int
    pattern: str = "H"


@dataclass(frozen=True)
class GuillotinePlan:
    placements: tuple[Placement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(self.placements))

    def __len__(self) -> int:
        return len(self.placements)

    @property
    def item_ids(self) -> list[int]:
        return [p.item_id for p in self.placements]

    def with_bin(self, bin_index: int) -> GuillotinePlan:
        return GuillotinePlan(tuple(Placement(p.item_id, bin_index, p.x, p.y, p.pattern)
                                    for p in self.placements))

    def without(self, item_id: int) -> GuillotinePlan:
        return GuillotinePlan(tuple(p for p in self.placements if p.item_id != item_id))

    def __add__(self, other: GuillotinePlan) -> GuillotinePlan:
        return GuillotinePlan(self.placements + other.placements)

    def region_tree(self, instance: Instance) -> dict[int, Region]:
        """Region occupied by each item, recovered by replaying the cuts."""
        regions, unplaced = replay(self, instance)
        if unplaced:
            raise InputError(f"plan is not a valid region tree: {unplaced}")
        return regions

    def free_regions(self, instance: Instance, bin_index: int | None = None) -> list[Region]:
        """Leaves of the region tree that hold no item (degenerate ones included)."""
        _, _, free = _replay(self, instance)
        return [r for r in free if bin_index is None or r.bin_index == bin_index]


def split(region: Region, item: Item, pattern: str) -> tuple[Region, Region]:
    """Cut ``item`` out of the bottom-left of ``region``; return (top, right) residuals."""
    if not region.fits(item):
        raise ValueError(f"item {item.id} ({item.width}x{item.height}) does not fit {region}")
    w, h = item.width, item.height
    if pattern == "H":
        top = Region(region.bin_index, region.x, region.y + h, region.width, region.height - h)
        right = Region(region.bin_index, region.x + w, region.y, region.width - w, h)
    elif pattern == "V":
        top = Region(region.bin_index, region.x, region.y + h, w, region.height - h)
        right = Region(region.bin_index, region.x + w, region.y, region.width - w, region.height)
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return top, right


def _replay(plan: GuillotinePlan, instance: Instance):
    W, H = instance.bin_spec.width, instance.bin_spec.height
    pending: dict[int, list[Placement]] = {}
    for p in plan.placements:
        if p.item_id in instance:
            pending.setdefault(p.bin_index, []).append(p)
    regions: dict[int, Region] = {}
    unplaced: list[tuple[int, int]] = []
    leaves: list[Region] = []
    for b in sorted(pending):
        todo = sorted(pending[b], key=lambda p: p.item_id)
        free = {(0, 0): Region(b, 0, 0, W, H)}
        degenerate: list[Region] = []
        progress = True
        while todo and progress:
            progress = False
            rest = []
            for p in todo:
                r = free.get((p.x, p.y))
                it = instance.item(p.item_id)
                if r is None or not r.fits(it) or p.pattern not in PATTERNS:
                    rest.append(p)
                    continue
                del free[(p.x, p.y)]
                regions[p.item_id] = r
                for child in split(r, it, p.pattern):
                    if child.degenerate:
                        degenerate.append(child)
                    else:
                        free[(child.x, child.y)] = child
                progress = True
            todo = rest
        unplaced.extend((p.item_id, b) for p in todo)
        leaves.extend(free.values())
        leaves.extend(degenerate)
    return regions, unplaced, leaves


def replay(plan: GuillotinePlan, instance: Instance) -> tuple[dict[int, Region], list[tuple[int, int]]]:
    """Rebuild the region tree of every bin from placement corners and patterns.

    Non-degenerate free regions never share a bottom-left corner, so each
    placement identifies its region uniquely. Returns the region of every
    item that could be replayed and the ``(item, bin)`` pairs that could not.
    """
    regions, unplaced, _ = _replay(plan, instance)
    return regions, unplaced


# ----------------------------------------------------------------------
# single-bin feasibility search
# ----------------------------------------------------------------------

class PackStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PackBudget:
    max_nodes: int | None = 200_000
    max_seconds: float | None = 0.5


DEFAULT_BUDGET = PackBudget()
UNLIMITED = PackBudget(None, None)


@dataclass(frozen=True)
class PackResult:
    status: PackStatus
    plan: GuillotinePlan | None = None
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is PackStatus.FEASIBLE


class _BudgetExhausted(Exception):
    pass


class _Packer:
    def __init__(self, items: list[Item], W: int, H: int, budget: PackBudget):
        # area desc, height desc, id
        self.items = sorted(items, key=lambda it: (-it.area, -it.height, it.id))
        self.dims = [(it.width, it.height, it.area) for it in self.items]
        self.W, self.H = W, H
        self.budget = budget
        self.nodes = 0
        self.failed: set = set()
        self.deadline = None if budget.max_seconds is None else time.perf_counter() + budget.max_seconds
        self.placed: list[tuple[int, int, int, str]] = []

    def _tick(self):
        self.nodes += 1
        b = self.budget
        if b.max_nodes is not None and self.nodes > b.max_nodes:
            raise _BudgetExhausted
        if self.deadline is not None and self.nodes & 127 == 0 and time.perf_counter() > self.deadline:
            raise _BudgetExhausted

    def run(self, regions: list[tuple[int, int, int, int]]) -> bool:
        return self._search(tuple(range(len(self.items))), regions)

    def _search(self, remaining: tuple[int, ...], regions: list[tuple[int, int, int, int]]) -> bool:
        self._tick()
        if not remaining:
            return True
        items = self.items
        dims = self.dims
        # a region can hold at most the area of the remaining items that fit it;
        # regions fitting none of them can only stay empty and are dropped
        usable = []
        cap = 0
        fit = set()
        for r in regions:
            rw, rh = r[2], r[3]
            s = 0
            for k in remaining:
                w, h, a = dims[k]
                if w <= rw and h <= rh:
                    s += a
                    fit.add(k)
            if s:
                usable.append(r)
                cap += min(s, rw * rh)
        if len(fit) < len(remaining):
            return False
        if sum(dims[k][2] for k in remaining) > cap:
            return False
        key = (tuple(sorted(dims[k][:2] for k in remaining)),
               tuple(sorted((r[2], r[3]) for r in usable)))
        if key in self.failed:
            return False

        # branch on the smallest usable region: fill it with some item, or leave it empty
        j = min(range(len(usable)), key=lambda j: (usable[j][2] * usable[j][3], usable[j][1], usable[j][0]))
        x, y, rw, rh = usable[j]
        others = usable[:j] + usable[j + 1:]
        # items matching a side of the region first, then by area; this finds tight layouts far sooner
        cands = [(pos, k) for pos, k in enumerate(remaining) if dims[k][0] <= rw and dims[k][1] <= rh]
        cands.sort(key=lambda pk: -(dims[pk[1]][0] == rw) - (dims[pk[1]][1] == rh))
        tried = set()
        for pos, k in cands:
            it = items[k]
            w, h = it.width, it.height
            if (w, h) in tried:
                continue
            tried.add((w, h))
            rest = remaining[:pos] + remaining[pos + 1:]
            # a full-width or full-height item yields identical residuals under both patterns
            patterns = ("H",) if (w == rw or h == rh) else PATTERNS
            for pat in patterns:
                if pat == "H":
                    top, right = (x, y + h, rw, rh - h), (x + w, y, rw - w, h)
                else:
                    top, right = (x, y + h, w, rh - h), (x + w, y, rw - w, rh)
                nxt = others + [r for r in (top, right) if r[2] > 0 and r[3] > 0]
                self.placed.append((it.id, x, y, pat))
                if self._search(rest, nxt):
                    return True
                self.placed.pop()
        if others and self._search(remaining, others):
            return True
        self.failed.add(key)
        return False


def pack(item_ids: Iterable[int], instance: Instance, budget: PackBudget = DEFAULT_BUDGET,
         bin_index: int = 1, hint: GuillotinePlan | None = None) -> PackResult:
    """Search for a guillotine layout of ``item_ids`` inside one bin.

    ``hint`` is a plan for a subset of the items; if the missing items can be
    dropped greedily into its free regions that layout is returned without
    search. Otherwise the region search is complete: INFEASIBLE is a proof,
    UNKNOWN means the budget ran out.
    """
    ids = list(dict.fromkeys(item_ids))
    if not ids:
        return PackResult(PackStatus.FEASIBLE, GuillotinePlan(), 0)
    items = [instance.item(i) for i in ids]
    W, H = instance.bin_spec.width, instance.bin_spec.height
    if sum(it.area for it in items) > W * H:
        return PackResult(PackStatus.INFEASIBLE, None, 0)

    # greedy best-fit completion of the hint (or of an empty bin) before any search
    if hint is None or not set(hint.item_ids) <= set(ids):
        hint = GuillotinePlan()
    known = set(hint.item_ids)
    plan = _extend(hint.with_bin(bin_index), [i for i in ids if i not in known], instance, bin_index)
    for order, choose in _PORTFOLIO:
        if plan is not None:
            return PackResult(PackStatus.FEASIBLE, plan, 0)
        plan = _extend(GuillotinePlan(), ids, instance, bin_index, order, choose)
    if plan is not None:
        return PackResult(PackStatus.FEASIBLE, plan, 0)

    packer = _Packer(items, W, H, budget)
    try:
        ok = packer.run([(0, 0, W, H)])
    except _BudgetExhausted:
        return PackResult(PackStatus.UNKNOWN, None, packer.nodes)
    if not ok:
        return PackResult(PackStatus.INFEASIBLE, None, packer.nodes)
    plan = GuillotinePlan(tuple(Placement(i, bin_index, x, y, pat) for i, x, y, pat in packer.placed))
    return PackResult(PackStatus.FEASIBLE, plan, packer.nodes)


def _extend(plan: GuillotinePlan, new_ids: Sequence[int], instance: Instance, bin_index: int,
            order=None, choose=None):
    if not new_ids:
        return plan
    free = [r for r in plan.free_regions(instance, bin_index) if not r.degenerate]
    if set(plan.item_ids) and not free:
        return None
    if not plan.placements:
        W, H = instance.bin_spec.width, instance.bin_spec.height
        free = [Region(bin_index, 0, 0, W, H)]
    placements = list(plan.placements)
    order = order or (lambda it: (-it.area, -it.height, it.id))
    choose = choose or extend_choice
    for it in sorted((instance.item(i) for i in new_ids), key=order):
        spot = choose(free, it)
        if spot is None:
            return None
        r, pat = spot
        free.remove(r)
        free.extend(c for c in split(r, it, pat) if not c.degenerate)
        placements.append(Placement(it.id, bin_index, r.x, r.y, pat))
    return GuillotinePlan(tuple(placements))


def _fixed_pattern(pat: str):
    # smallest fitting region, always the same first cut
    def choose(free, item):
        fits = [r for r in free if r.fits(item)]
        if not fits:
            return None
        return min(fits, key=lambda r: (r.area, r.y, r.x)), pat
    return choose


def _bottom_left(free, item):
    fits = [r for r in free if r.fits(item)]
    if not fits:
        return None
    return min(fits, key=lambda r: (r.y, r.x)), "H"


# shelf-like passes that often succeed where best-fit by area does not
_PORTFOLIO = (
    (lambda it: (-it.height, -it.width, it.id), _fixed_pattern("H")),
    (lambda it: (-it.width, -it.height, it.id), _fixed_pattern("V")),
    (lambda it: (-it.height, -it.width, it.id), _bottom_left),
)


def extend_choice(free: Sequence[Region], item: Item) -> tuple[Region, str] | None:
    """Best-fit choice of a free region for ``item``: smallest residual area, H before V.

    Between the two patterns prefer the one whose larger residual is larger,
    which keeps big free rectangles available for later items.
    """
    best = None
    for r in free:
        if not r.fits(item):
            continue
        key = (r.area - item.area, r.y, r.x)
        if best is None or key < best[0]:
            best = (key, r)
    if best is None:
        return None
    r = best[1]
    t_h, r_h = split(r, item, "H")
    t_v, r_v = split(r, item, "V")
    pat = "H" if max(t_h.area, r_h.area) >= max(t_v.area, r_v.area) else "V"
    return r, pat


# ----------------------------------------------------------------------
# lower bounds on the number of bins
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _thresholds(size: int, limit: int = 10) -> tuple[int, ...]:
    half = size // 2
    if half < 1:
        return ()
    if half <= limit:
        return tuple(range(1, half + 1))
    return tuple(sorted(set(int(round(v)) for v in np.linspace(1, half, limit))))


def _dff(sizes: np.ndarray, capacity: int, eps: int) -> np.ndarray:
    """U^eps: sizes above capacity-eps count as full, sizes below eps vanish."""
    out = sizes.astype(float).copy()
    out[sizes > capacity - eps] = capacity
    out[sizes < eps] = 0.0
    return out


def _dff_table(sizes: np.ndarray, capacity: int) -> np.ndarray:
    """Row 0 is the identity, row t+1 is U^eps for the t-th threshold (same as stacking ``_dff``)."""
    eps = np.array(_thresholds(capacity), dtype=float)[:, None]
    s = sizes.astype(float)[None, :]
    mapped = np.where(s > capacity - eps, float(capacity), np.where(s < eps, 0.0, s))
    return np.vstack([s, mapped])


def lower_bound(item_ids: Iterable[int], instance: Instance) -> int:
    """Valid lower bound on the number of bins needed to hold ``item_ids``.

    Maximum of the continuous area bound, the count of items larger than half
    the bin in both directions, and area bounds after mapping widths and
    heights through dual-feasible step functions on a coarse threshold grid.
    """
    ids = list(item_ids)
    if not ids:
        return 0
    W, H = instance.bin_spec.width, instance.bin_spec.height
    item = instance.item
    w = np.array([item(i).width for i in ids])
    h = np.array([item(i).height for i in ids])
    cap = W * H
    best = max(1, int(((2 * w > W) & (2 * h > H)).sum()))
    # every (width map, height map) pair at once; entry (0, 0) is the plain area bound
    areas = _dff_table(w, W) @ _dff_table(h, H).T
    # tolerance guards float noise on an exact multiple of the capacity
    return max(best, math.ceil(float(areas.max()) / cap - 1e-9))


def used_with_item_bound(batch_ids: Iterable[int], candidate_id: int, instance: Instance) -> bool:
    """True when the bin lower bound of ``batch ∪ {candidate}`` is at most one bin."""
    ids = set(batch_ids)
    ids.add(candidate_id)
    return lower_bound(ids, instance) <= 1
