import csv
import json
import math
import subprocess
import sys

import pytest

from jitbp.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main, ratio_rows
from jitbp.instgen import ManifestRow, read_manifest
from jitbp.model import load_solution, make_instance, save_instance


@pytest.fixture
def one_item(tmp_path):
    path = tmp_path / "one.json"
    save_instance(make_instance([(4, 6)], [300]), path)
    return path


@pytest.fixture
def pair(tmp_path):
    path = tmp_path / "pair.json"
    save_instance(make_instance([(5, 5), (5, 5)], [300, 300]), path)
    return path


def test_gen_writes_files_and_manifest(tmp_path):
    args = ["gen", "--class", "1", "--n", "20", "--dist", "normal", "--count", "10", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 11 and "manifest.csv" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_manifest(tmp_path / "a" / "manifest.csv")
    assert [r.index for r in rows] == list(range(10))


@pytest.mark.parametrize("bad", [["--class", "11", "--n", "5"], ["--class", "1", "--n", "0"],
                                 ["--class", "1", "--n", "5", "--dist", "poisson"]])
def test_gen_bad_flags_are_usage_errors(tmp_path, bad):
    assert main(["gen", *bad, "--out", str(tmp_path)]) == EXIT_USAGE


@pytest.mark.parametrize("algo", ["cph", "abh", "baseline-edd"])
def test_solve_single_item_any_algo(one_item, tmp_path, algo):
    out = tmp_path / f"{algo}.sol.json"
    trace = tmp_path / f"{algo}.csv"
    assert main(["solve", str(one_item), "--algo", algo, "--out", str(out), "--trace", str(trace)]) == EXIT_OK
    assert load_solution(out).objective == 0
    assert trace.read_text().count("\n") >= 1
    assert main(["verify", str(one_item), str(out)]) == EXIT_OK


def test_solve_default_output_path(one_item):
    assert main(["solve", str(one_item)]) == EXIT_OK
    assert one_item.with_suffix(".abh.sol.json").exists()


def test_abh_twice_identical(tmp_path):
    main(["gen", "--class", "5", "--n", "15", "--count", "1", "--out", str(tmp_path)])
    inst = tmp_path / "c05_n015_normal_00.json"
    for tag in "ab":
        assert main(["solve", str(inst), "--seed", "3", "--out", str(tmp_path / f"{tag}.json")]) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_cph_tiny_limit_returns_feasible(tmp_path, capsys):
    main(["gen", "--class", "1", "--n", "20", "--count", "1", "--out", str(tmp_path)])
    inst = tmp_path / "c01_n020_normal_00.json"
    out = tmp_path / "cph.json"
    assert main(["solve", str(inst), "--algo", "cph", "--time-limit", "0.001", "--out", str(out)]) == EXIT_OK
    assert "status=feasible" in capsys.readouterr().out
    assert main(["verify", str(inst), str(out)]) == EXIT_OK


def test_verify_detects_overlap(pair, tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["solve", str(pair), "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    for pl in data["placements"]:
        pl["x"], pl["y"] = 0, 0
    out.write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["verify", str(pair), str(out)]) == EXIT_VERIFY
    assert "VIOLATION overlap(1,2,1)" in capsys.readouterr().out


def test_verify_detects_objective_mismatch(pair, tmp_path, capsys):
    out = tmp_path / "s.json"
    main(["solve", str(pair), "--out", str(out)])
    data = json.loads(out.read_text())
    data["objective"] += 1e-3
    out.write_text(json.dumps(data))
    assert main(["verify", str(pair), str(out)]) == EXIT_VERIFY
    assert "objective-mismatch" in capsys.readouterr().out


def test_missing_file_is_usage_error(tmp_path):
    assert main(["verify", str(tmp_path / "nope.json"), str(tmp_path / "nope2.json")]) == EXIT_USAGE


def test_malformed_instance_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == EXIT_USAGE


def rows(*entries):
    return [{"file": f, "algo": a, "objective": "" if z is None else repr(float(z))} for f, a, z in entries]


def test_ratios_basic():
    per_run, _ = ratio_rows(rows(("i", "cph", 10), ("i", "abh", 12)), [])
    assert per_run == {("i", "cph"): 1.0, ("i", "abh"): pytest.approx(1.2)}


def test_ratios_ties_and_zero():
    per_run, _ = ratio_rows(rows(("i", "cph", 7), ("i", "abh", 7), ("j", "cph", 0), ("j", "abh", 0),
                                 ("k", "cph", 0), ("k", "abh", 3)), [])
    assert per_run[("i", "cph")] == per_run[("i", "abh")] == 1.0
    assert per_run[("j", "cph")] == per_run[("j", "abh")] == 1.0
    assert per_run[("k", "cph")] == 1.0 and math.isinf(per_run[("k", "abh")])


def test_ratios_skip_failed_runs():
    manifest = [ManifestRow(1, 20, "normal", 0, 0, "i", 1.0)]
    per_run, table = ratio_rows(rows(("i", "cph", None), ("i", "abh", 12)), manifest)
    assert per_run == {("i", "abh"): 1.0}
    assert table == [{"class": 1, "n": 20, "dist": "normal", "algo": "abh", "mean_ratio": "1.0", "count": 1}]


def test_bench_end_to_end(tmp_path):
    suite = tmp_path / "suite"
    main(["gen", "--class", "1", "--n", "6", "--count", "2", "--dist", "uniform", "--out", str(suite)])
    out = tmp_path / "bench"
    code = main(["bench", str(suite / "manifest.csv"), "--algos", "cph,abh,baseline-edd",
                 "--time-limit", "5", "--out", str(out)])
    assert code == EXIT_OK
    with (out / "results.csv").open() as fh:
        results = list(csv.DictReader(fh))
    assert len(results) == 6 and all(r["status"] != "failed" for r in results)
    with (out / "ratios.csv").open() as fh:
        table = list(csv.DictReader(fh))
    assert {r["algo"] for r in table} == {"cph", "abh", "baseline-edd"}
    assert all(float(r["mean_ratio"]) >= 1.0 for r in table)
    per_run, _ = ratio_rows(results, read_manifest(suite / "manifest.csv"))
    for f in {r["file"] for r in results}:
        assert min(v for (ff, _), v in per_run.items() if ff == f) == 1.0


def test_bench_unknown_algo(tmp_path):
    main(["gen", "--class", "1", "--n", "3", "--count", "1", "--out", str(tmp_path)])
    assert main(["bench", str(tmp_path / "manifest.csv"), "--algos", "magic"]) == EXIT_USAGE


def test_module_entry_point(one_item):
    proc = subprocess.run([sys.executable, "-m", "jitbp", "verify", str(one_item), str(one_item)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
