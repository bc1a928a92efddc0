"""Command-line front end: ``jitbp gen | solve | verify | bench``.

Exit codes: 0 ok, 1 verification failure, 2 usage or input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import abh, cp_search
from .guillotine import PackBudget
from .instgen import (CLASSES, DISTS, GenSpec, ManifestRow, cell_seed, due_date_mean, generate, instance_filename,
                      read_manifest, write_suite)
from .model import InputError, Instance, Solution, load_instance, load_solution, save_solution, validate

log = logging.getLogger("jitbp")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
ALGOS = ("cph", "abh", "baseline-edd")
VERIFY_TOL = 1e-6
RESULT_FIELDS = ("file", "algo", "seed", "objective", "status", "wall_s", "bins")
RATIO_FIELDS = ("class", "n", "dist", "algo", "mean_ratio", "count")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


# -- solver dispatch ----------------------------------------------------------

def run_algo(instance: Instance, algo: str, time_limit: float | None = None, seed: int = 0,
             r: float = 40.0, rho: int = 3, pack_ms: float = 500.0,
             pack_nodes: int | None = 200_000) -> tuple[Solution, str, str]:
    """Run one solver; returns (solution, status, trace CSV text)."""
    if algo == "cph":
        res = cp_search.solve(instance, time_limit=time_limit, seed=seed)
        return res.solution, res.status, res.trace_csv()
    if algo == "abh":
        budget = PackBudget(pack_nodes, None if pack_ms <= 0 else pack_ms / 1000.0)
        state = abh.construct(instance, abh.AbhParams(peak_width=r, candidate_count=rho,
                                                      pack_budget=budget, seed=seed))
        return state.solution(), "heuristic", state.trace_csv()
    if algo == "baseline-edd":
        sol = cp_search.edd_solution(instance)
        return sol, "heuristic", f"elapsed_s,node_count,objective\n0.0,0,{sol.objective!r}\n"
    raise UsageError(f"unknown algorithm {algo!r}")


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    suite = []
    for idx in range(args.count):
        seed = cell_seed(args.seed, args.class_id, args.n, args.dist, idx)
        inst = generate(GenSpec(args.class_id, args.n, args.dist, seed))
        lam = due_date_mean([it.width for it in inst.items], [it.height for it in inst.items],
                            inst.bin_spec, inst.timing.load_time)
        suite.append((ManifestRow(args.class_id, args.n, args.dist, idx, seed,
                                  instance_filename(args.class_id, args.n, args.dist, idx), lam), inst))
    manifest = write_suite(suite, args.out)
    print(f"wrote {len(suite)} instances and {manifest}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    sol, status, trace = run_algo(inst, args.algo, args.time_limit, args.seed, args.r, args.rho,
                                  args.pack_ms, args.pack_nodes)
    report = validate(sol, inst, VERIFY_TOL)
    if not report.ok:  # a solver bug, not a user error
        raise RuntimeError("solver produced an invalid solution: " + "; ".join(report.violations))
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(f".{args.algo}.sol.json")
    save_solution(sol, out)
    if args.trace:
        Path(args.trace).write_text(trace, encoding="utf-8")
    print(f"{args.algo}: objective={sol.objective!r} bins={sol.bins_used} status={status} -> {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(args.solution)
    report = validate(sol, inst, VERIFY_TOL)
    if report.ok:
        print(f"OK objective={sol.objective!r} bins={sol.bins_used}")
        return EXIT_OK
    for v in report.violations:
        print(f"VIOLATION {v}")
    return EXIT_VERIFY


def _bench_one(job) -> dict:
    path, algo, seed, time_limit, pack_ms, pack_nodes = job
    row = {"file": path.name, "algo": algo, "seed": seed, "objective": "", "status": "failed",
           "wall_s": "", "bins": ""}
    try:
        inst = load_instance(path)
        t0 = time.perf_counter()
        sol, status, _ = run_algo(inst, algo, time_limit, seed, pack_ms=pack_ms, pack_nodes=pack_nodes)
        wall = time.perf_counter() - t0
        if not validate(sol, inst, VERIFY_TOL).ok:
            row["status"] = "invalid"
            return row
        row.update(objective=repr(sol.objective), status=status, wall_s=f"{wall:.6f}", bins=sol.bins_used)
    except Exception as exc:  # one bad run must not sink the sweep
        log.error("%s on %s failed: %s", algo, path.name, exc)
    return row


def ratio_rows(results: list[dict], manifest: list[ManifestRow]) -> tuple[dict, list[dict]]:
    """Per-run ratio z/z_best and the mean ratio per (class, n, dist, algo).

    Failed or invalid runs get no ratio and are left out of the means. When
    z_best is 0 a run scores 1.0 if it also reached 0, otherwise infinity.
    """
    meta = {m.file: m for m in manifest}
    best: dict[str, float] = {}
    for r in results:
        if r["objective"] != "":
            z = float(r["objective"])
            best[r["file"]] = min(best.get(r["file"], math.inf), z)
    per_run = {}
    cells: dict[tuple, list[float]] = defaultdict(list)
    for r in results:
        if r["objective"] == "":
            continue
        z, zb = float(r["objective"]), best[r["file"]]
        ratio = z / zb if zb > 0 else (1.0 if z == 0 else math.inf)
        per_run[(r["file"], r["algo"])] = ratio
        m = meta.get(r["file"])
        if m is not None:
            cells[(m.class_id, m.n, m.dist, r["algo"])].append(ratio)
    table = [{"class": c, "n": n, "dist": d, "algo": a, "mean_ratio": repr(sum(v) / len(v)), "count": len(v)}
             for (c, n, d, a), v in sorted(cells.items())]
    return per_run, table


def cmd_bench(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGOS]
    if bad or not algos:
        raise UsageError(f"unknown algorithm(s): {', '.join(bad) or '(none)'}")
    jobs = [(manifest_path.parent / m.file, a, args.seed, args.time_limit, args.pack_ms, args.pack_nodes)
            for m in manifest for a in algos]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(results)
    _, table = ratio_rows(results, manifest)
    with (out / "ratios.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, RATIO_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(table)
    failed = sum(r["objective"] == "" for r in results)
    print(f"{len(results)} runs, {failed} failed -> {out / 'results.csv'}, {out / 'ratios.csv'}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jitbp", description="Guillotine bin packing with JIT batch scheduling.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate benchmark instances plus manifest.csv")
    g.add_argument("--class", dest="class_id", type=int, required=True, choices=sorted(CLASSES), metavar="1-10")
    g.add_argument("--n", type=_positive_int, required=True, help="items per instance")
    g.add_argument("--dist", choices=DISTS, default="normal", help="due-date law (default normal)")
    g.add_argument("--count", type=_positive_int, default=10, help="instances (default 10)")
    g.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    g.add_argument("--out", default=".", help="output directory (default .)")
    g.set_defaults(func=cmd_gen)

    def solver_flags(sp):
        sp.add_argument("--time-limit", type=_nonneg_float, default=None,
                        help="CPH wall-clock limit in seconds (default: none, run to optimality)")
        sp.add_argument("--seed", type=int, default=0, help="seed for CPH restarts (default 0)")
        sp.add_argument("--pack-ms", type=_nonneg_float, default=500.0,
                        help="ABH per-call packing time budget in ms, 0 for none (default 500)")
        sp.add_argument("--pack-nodes", type=_positive_int, default=200_000,
                        help="ABH per-call packing node budget (default 200000)")

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("instance")
    s.add_argument("--algo", choices=ALGOS, default="abh", help="default abh")
    solver_flags(s)
    s.add_argument("--r", type=_nonneg_float, default=40.0, help="ABH peak-cluster width (default 40)")
    s.add_argument("--rho", type=_positive_int, default=3, help="ABH candidate-list length (default 3)")
    s.add_argument("--out", default=None, help="solution file (default <instance>.<algo>.sol.json)")
    s.add_argument("--trace", default=None, help="write the progress trace CSV here")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution against its instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="run solvers over a manifest and report performance ratios")
    b.add_argument("manifest")
    b.add_argument("--algos", default="cph,abh", help="comma list from cph,abh,baseline-edd (default cph,abh)")
    solver_flags(b)
    b.add_argument("--jobs", type=_positive_int, default=1, help="parallel worker processes (default 1)")
    b.add_argument("--out", default="bench", help="output directory (default bench)")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "r", 1.0) == 0:
        parser.print_usage(sys.stderr)
        print("jitbp: error: --r must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, InputError, FileNotFoundError) as exc:
        print(f"jitbp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.exception("internal error")
        print(f"jitbp: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
