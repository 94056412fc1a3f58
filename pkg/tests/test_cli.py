import csv
import io
import json
import subprocess
import sys

import pytest

from loopcrit.cli import CSV_COLUMNS, main

SIGMA = ["sigma", "--d", "8", "--theta", "2", "--u", "0.5", "--alpha", "0", "--m-max", "5",
         "--n", "6400", "--method", "recursive", "--seed", "3"]


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sigma_csv_rows(capsys):
    code, out, _ = run(capsys, SIGMA)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [int(r["m"]) for r in rows] == list(range(6))
    assert float(rows[0]["estimate"]) == 1.0
    assert all(r["subcommand"] == "sigma" and r["seed"] == "3" for r in rows)


def test_byte_identical_across_workers(tmp_path, capsys, monkeypatch):
    outs = []
    for workers, env in ((1, None), (4, None), (1, "3")):
        if env:
            monkeypatch.setenv("LOOPCRIT_THREADS", env)
        j = tmp_path / f"s{workers}{env}.json"
        c = tmp_path / f"s{workers}{env}.csv"
        assert main(SIGMA + ["--workers", str(workers), "--omit-timing", "--json", str(j),
                             "--csv", str(c)]) == 0
        outs.append((c.read_bytes(), j.read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    doc = json.loads(outs[0][1])
    assert set(doc) == {"subcommand", "params", "seed", "git_describe", "result"}
    capsys.readouterr()


def test_wall_time_present_by_default(tmp_path, capsys):
    j = tmp_path / "f.json"
    assert main(["formulas", "--d", "16", "--theta", "2", "--u", "0.5", "--json", str(j)]) == 0
    doc = json.loads(j.read_text())
    assert doc["wall_time_s"] >= 0
    assert doc["result"]["alpha_star_exact"] == "1/3"
    assert doc["result"]["beta_c_exact"] == "49/384"


def test_rate_arguments_are_exclusive(capsys):
    with pytest.raises(SystemExit) as e:
        main(["sigma", "--d", "4", "--m-max", "2"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["sigma", "--d", "4", "--m-max", "2", "--beta", "0.3", "--alpha", "1"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["sigma", "--d", "4", "--m-max", "2", "--beta", "0.3", "--u", "2"])
    assert e.value.code == 2


def test_numeric_error_exits_one(capsys):
    code, _, err = run(capsys, ["scan", "--d", "1", "--m-max", "2", "--n", "100"])
    assert code == 1 and "BracketError" in err


def test_check_subcommands(capsys):
    code, out, _ = run(capsys, ["oracle-check", "--beta", "0.5", "--theta", "2", "--u", "0.5"])
    assert code == 0 and json.loads(out)["result"]["passed"]
    code, out, _ = run(capsys, ["quantum-check", "--betas", "0.5", "--deltas", "0", "--us", "0.5"])
    assert code == 0 and json.loads(out)["result"]["max_difference"] < 1e-8
    code, out, _ = run(capsys, ["tracer-fuzz", "--trials", "2000"])
    assert code == 0 and json.loads(out)["result"]["mismatches"] == 0


def test_recursion_and_zm_subcommands(capsys):
    code, out, _ = run(capsys, ["recursion", "--d", "8", "--theta", "2", "--u", "0.5", "--alpha",
                                "0", "--m-max", "4", "--n", "32000", "--method", "recursive"])
    assert code == 0 and len(list(csv.DictReader(io.StringIO(out)))) == 5
    code, out, _ = run(capsys, ["zm", "--d-list", "4", "8", "--n", "32000", "--method",
                                "recursive"])
    assert len(list(csv.DictReader(io.StringIO(out)))) == 4


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "loopcrit.cli", "formulas", "--theta", "1",
                        "--u", "1", "--d", "16"], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["result"]["alpha_star_exact"] == "1"
