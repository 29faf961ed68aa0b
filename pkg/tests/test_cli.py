import csv
import io
import json
import os
from pathlib import Path

import pytest

from reoptdb.cli import main
from reoptdb.ott import DESK, ott_queries

GOLDEN = Path(__file__).parent / "golden"
VOLATILE = {"wall_time_s", "reopt_time", "exec_time_original", "exec_time_reopt"}
EMPTY_Q = ott_queries(DESK, 4, 4)[0].sql()


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def _scrub(obj):
    if isinstance(obj, dict):
        return {k: ("<volatile>" if k in VOLATILE else _scrub(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_scrub(v) for v in obj]
    return obj


def check_golden(name, text):
    data = _scrub(json.loads(text))
    assert data["schema_version"] == 1
    path = GOLDEN / f"{name}.json"
    if os.environ.get("REOPTDB_UPDATE_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    assert data == json.loads(path.read_text())


@pytest.fixture(scope="module")
def catalog(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "cat"
    assert run("gen-ott", d)[0] == 0
    assert run("analyze", d)[0] == 0
    assert run("sample", d, "--fraction", "1.0")[0] == 0
    return d


def test_gen_ott_json(tmp_path):
    code, out = run("gen-ott", tmp_path / "c", "--K", 3, "--rows", 100, "--json")
    assert code == 0
    d = json.loads(out)
    assert d["relations"] == ["R1", "R2", "R3"] and d["domain_size"] == 10


def test_sample_json(catalog):
    code, out = run("sample", catalog, "--fraction", "1.0", "--json")
    assert code == 0
    check_golden("sample", out)


def test_explain_json(catalog):
    code, out = run("explain", catalog, EMPTY_Q, "--json")
    assert code == 0
    check_golden("explain", out)


def test_explain_with_gamma_file(catalog, tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps([{"join": ["R4[A4=0]", "R5[A5=1]"], "rows": 0}]))
    code, out = run("explain", catalog, EMPTY_Q, "--gamma", g)
    assert code == 0
    first_join = [l for l in out.splitlines() if "Join" in l][-1]
    assert "[Γ]" in first_join


def test_reopt_trace_marks_zero_join(catalog):
    code, out = run("reopt", catalog, EMPTY_Q)
    assert code == 0
    assert "-- round 1" in out and "plan unchanged" in out
    final = out.split("final plan after")[1]
    deepest = [l for l in final.splitlines() if "Join" in l][-1]
    assert "rows=0" in deepest and "[Γ]" in deepest


def test_reopt_json(catalog):
    code, out = run("reopt", catalog, EMPTY_Q, "--json")
    assert code == 0
    check_golden("reopt", out)


@pytest.mark.parametrize("which", ["original", "reopt"])
def test_run_json(catalog, which):
    code, out = run("run", catalog, EMPTY_Q, "--plan", which, "--json")
    assert code == 0
    d = json.loads(out)
    assert d["report"]["result_rows"] == 0
    check_golden(f"run_{which}", out)


def test_simulate_sn_csv_and_figure(tmp_path):
    fig = tmp_path / "sn.png"
    code, out = run("simulate-sn", "--n-list", "100,1000", "--figure", fig)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [round(float(r["closed_form"])) for r in rows] == [12, 39]
    assert fig.stat().st_size > 0


def test_simulate_sn_json():
    code, out = run("simulate-sn", "--n-list", "5,10", "--trials", 50, "--seed", 3, "--json")
    assert code == 0
    check_golden("simulate_sn", out)


def test_seed_env(monkeypatch):
    monkeypatch.setenv("REOPTDB_SEED", "3")
    a = run("simulate-sn", "--n-list", "10", "--trials", 50, "--json")[1]
    b = run("simulate-sn", "--n-list", "10", "--trials", 50, "--seed", 3, "--json")[1]
    assert a == b
    monkeypatch.setenv("REOPTDB_SEED", "x")
    assert run("simulate-sn", "--n-list", "10", "--trials", 5)[0] == 2


def test_bench_ott(tmp_path):
    out_json, fig = tmp_path / "b.json", tmp_path / "b.png"
    code, _ = run("bench-ott", "--K", 3, "--rows", 100, "--joins", 2, "--m", 2, "--fraction", "1.0",
                  "--output", out_json, "--figure", fig)
    assert code == 0
    d = json.loads(out_json.read_text())
    assert len(d["queries"]) == 6
    assert all(q["result_rows"] == 0 for q in d["queries"])
    assert fig.stat().st_size > 0
    check_golden("bench_ott", out_json.read_text())


def test_unknown_subcommand(capsys):
    assert run("frobnicate")[0] == 2
    assert "usage" in capsys.readouterr().err


def test_bad_input_exit_codes(catalog, tmp_path):
    assert run("explain", catalog, "SELECT COUNT(*) FROM R1 WHERE R1.A1 > 0")[0] == 1
    assert run("explain", tmp_path / "nowhere", EMPTY_Q)[0] == 1


def test_invariant_violation_exit_code(catalog):
    assert run("reopt", catalog, EMPTY_Q, "--max-iters", 1)[0] == 3
