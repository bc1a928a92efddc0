"""Benchmark instance generator (ten classes of item sizes, two due-date laws).

Each instance is drawn from numpy's PCG64 generator. The per-instance seed is
derived from ``(base_seed, class, n, dist, index)`` through ``SeedSequence``,
so any cell of a suite can be regenerated on its own, on any platform.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import BinSpec, Instance, Item, TimingParams, instance_to_dict

DISTS = ("normal", "uniform")
BENCH_SIZES = (20, 40, 60, 80, 100)

# class -> (bin side, item side range or None for the four-type mixture, density label)
CLASSES = {
    1: (10, (1, 10), "L"),
    2: (30, (1, 10), "S"),
    3: (40, (1, 35), "L"),
    4: (100, (1, 35), "S"),
    5: (100, (1, 100), "L"),
    6: (300, (1, 100), "S"),
    7: (100, None, "L"),
    8: (100, None, "L"),
    9: (100, None, "L"),
    10: (100, None, "S"),
}

# dominant item type of the mixture classes
DOMINANT_TYPE = {7: 1, 8: 2, 9: 3, 10: 4}


def type_ranges(W: int, H: int) -> dict[int, tuple[tuple[int, int], tuple[int, int]]]:
    """Integer (width range, height range) of the four item types."""
    two_w, two_h = math.ceil(2 * W / 3), math.ceil(2 * H / 3)
    half_w_lo, half_h_lo = math.ceil(W / 2), math.ceil(H / 2)
    half_w, half_h = W // 2, H // 2
    return {
        1: ((two_w, W), (1, half_h)),
        2: ((1, half_w), (two_h, H)),
        3: ((half_w_lo, W), (half_h_lo, H)),
        4: ((1, half_w), (1, half_h)),
    }


def density(class_id: int) -> str:
    return CLASSES[class_id][2]


@dataclass(frozen=True)
class GenSpec:
    class_id: int
    n: int
    due_dist: str = "normal"
    seed: int = 0
    timing: TimingParams = TimingParams()

    def __post_init__(self):
        if self.class_id not in CLASSES:
            raise ValueError(f"class must be 1..10, got {self.class_id}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.due_dist not in DISTS:
            raise ValueError(f"due_dist must be one of {DISTS}")


def draw_dims(class_id: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Widths, heights and item types (0 for the plain uniform classes)."""
    side, rng_range, _ = CLASSES[class_id]
    w = np.empty(count, dtype=np.int64)
    h = np.empty(count, dtype=np.int64)
    types = np.zeros(count, dtype=np.int64)
    if rng_range is not None:
        lo, hi = rng_range
        for a in range(count):
            w[a] = rng.integers(lo, hi, endpoint=True)
            h[a] = rng.integers(lo, hi, endpoint=True)
        return w, h, types
    ranges = type_ranges(side, side)
    dom = DOMINANT_TYPE[class_id]
    probs = np.array([0.7 if t == dom else 0.1 for t in (1, 2, 3, 4)])
    for a in range(count):
        t = int(rng.choice(4, p=probs)) + 1
        (wl, wh), (hl, hh) = ranges[t]
        types[a] = t
        w[a] = rng.integers(wl, wh, endpoint=True)
        h[a] = rng.integers(hl, hh, endpoint=True)
    return w, h, types


def due_date_mean(widths: Iterable[int], heights: Iterable[int], bin_spec: BinSpec, load_time: float) -> float:
    area = sum(int(w) * int(h) for w, h in zip(widths, heights))
    return load_time * area / (2 * bin_spec.width * bin_spec.height)


def generate(spec: GenSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    side = CLASSES[spec.class_id][0]
    bin_spec = BinSpec(side, side)
    w, h, _ = draw_dims(spec.class_id, spec.n, rng)
    eps = rng.integers(1, 5, size=spec.n, endpoint=True)
    tau = rng.integers(1, 5, size=spec.n, endpoint=True)
    lam = due_date_mean(w, h, bin_spec, spec.timing.load_time)
    if spec.due_dist == "normal":
        due = rng.normal(lam, 0.1 * lam, size=spec.n)
    else:
        due = rng.uniform(0.0, 2 * lam, size=spec.n)
    due = np.round(np.maximum(due, 0.0), 2)
    items = tuple(Item(a + 1, int(w[a]), int(h[a]), float(due[a]), float(eps[a]), float(tau[a]))
                  for a in range(spec.n))
    return Instance(items, bin_spec, spec.timing)


def cell_seed(base_seed: int, class_id: int, n: int, dist: str, index: int) -> int:
    ss = np.random.SeedSequence([base_seed, class_id, n, DISTS.index(dist), index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def instance_filename(class_id: int, n: int, dist: str, index: int) -> str:
    return f"c{class_id:02d}_n{n:03d}_{dist}_{index:02d}.json"


@dataclass(frozen=True)
class ManifestRow:
    class_id: int
    n: int
    dist: str
    index: int
    seed: int
    file: str
    lam: float


MANIFEST_FIELDS = ("class", "n", "dist", "index", "seed", "file", "lambda")


def generate_suite(base_seed: int, sizes: Sequence[int] = BENCH_SIZES, classes: Sequence[int] = tuple(CLASSES),
                   dists: Sequence[str] = DISTS, count_per_cell: int = 10,
                   out_dir: str | Path | None = None) -> list[tuple[ManifestRow, Instance]]:
    """Generate every (class, size, dist, index) cell; write files and ``manifest.csv`` if ``out_dir``."""
    suite = []
    for c in classes:
        for n in sizes:
            for dist in dists:
                for idx in range(count_per_cell):
                    seed = cell_seed(base_seed, c, n, dist, idx)
                    inst = generate(GenSpec(c, n, dist, seed))
                    lam = due_date_mean([it.width for it in inst.items], [it.height for it in inst.items],
                                        inst.bin_spec, inst.timing.load_time)
                    row = ManifestRow(c, n, dist, idx, seed, instance_filename(c, n, dist, idx), lam)
                    suite.append((row, inst))
    if out_dir is not None:
        write_suite(suite, out_dir)
    return suite


def write_suite(suite, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for row, inst in suite:
        (out / row.file).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n", encoding="utf-8")
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for row, _ in suite:
            writer.writerow([row.class_id, row.n, row.dist, row.index, row.seed, row.file, repr(row.lam)])
    return manifest


def read_manifest(path) -> list[ManifestRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [ManifestRow(int(r["class"]), int(r["n"]), r["dist"], int(r["index"]), int(r["seed"]),
                            r["file"], float(r["lambda"]))
                for r in csv.DictReader(fh)]
