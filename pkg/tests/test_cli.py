import csv
import json
import subprocess
import sys

import pytest

from hypckn.cli import main, parse_range, read_config


def run(tmp_path, *args, sub="o"):
    out = tmp_path / sub
    code = main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with open(path) as fh:
        assert fh.readline().strip() == "# schema=1"
        return list(csv.DictReader(fh))


def test_constant_hardy_case(tmp_path):
    code, out = run(tmp_path, "constant", "--N", "3", "--a", "0", "--b", "1", "--format", "csv,json,svg")
    assert code == 0
    rep = json.loads((out / "constant.json").read_text())
    assert rep["floor"] == 0.25
    assert rep["estimate"] == pytest.approx(0.25, rel=0.02)
    assert (out / "profile.csv").read_text().startswith("# schema=1\nt,u\n")
    assert (out / "profile.svg").read_text().startswith("<svg")
    assert (out / "history.svg").exists()


def test_constant_sobolev_case(tmp_path):
    code, out = run(tmp_path, "constant", "--a", "0", "--b", "0")
    rep = json.loads((out / "constant.json").read_text())
    assert code == 0
    assert rep["estimate"] == pytest.approx(rep["euclidean_sobolev"], rel=0.05)


def test_constant_validation_exit(tmp_path, capsys):
    code, out = run(tmp_path, "constant", "--a", "0", "--b", "2")
    assert code == 2
    payload = json.loads(capsys.readouterr().out)
    assert payload["violations"][0]["constraint"] == "b-a <= 1"
    assert json.loads((out / "violations.json").read_text()) == payload


def test_solve_classical_and_weighted(tmp_path):
    code, out = run(tmp_path, "solve", "--q", "4", "--format", "csv,json,svg")
    assert code == 0
    rep = json.loads((out / "solve.json").read_text())
    assert rep["converged"] and rep["positivity_ok"] and rep["residual"] < 1e-6
    assert (out / "solution.csv").exists() and (out / "solution.svg").exists()
    code, out = run(tmp_path, "solve", "--alpha", "1", "--beta", "0.5", "--lambda", "0.5", "--q", "2.5", sub="w")
    assert code == 0 and json.loads((out / "solve.json").read_text())["converged"]


def test_solve_exit_codes(tmp_path):
    assert run(tmp_path, "solve", "--q", "7", sub="a")[0] == 2
    assert run(tmp_path, "solve", "--q", "4", "--max-iter", "20", "--inject-fault", "nonconverge", sub="b")[0] == 3


def test_solve_is_deterministic(tmp_path):
    _, a = run(tmp_path, "solve", "--q", "3", "--grid-n", "256", sub="a")
    _, b = run(tmp_path, "solve", "--q", "3", "--grid-n", "256", sub="b")
    for name in ("solve.json", "solution.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# classical cell\nq = 4   # exponent\ngrid-n = 256\nalpha = 0\n")
    assert read_config(cfg) == {"q": "4", "grid_n": "256", "alpha": "0"}
    code, out = run(tmp_path, "solve", "--config", str(cfg), "--q", "3")
    assert code == 0
    rep = json.loads((out / "solve.json").read_text())
    assert rep["q"] == 3.0 and rep["grid_n"] == 256


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense line\n")
    assert run(tmp_path, "solve", "--config", str(cfg))[0] == 2


def test_verify(tmp_path):
    code, out = run(tmp_path, "verify")
    assert code == 0
    table = rows(out / "verify.csv")
    assert all(r["passed"] == "true" for r in table) and len(table) >= 8


def test_verify_subset_and_fault(tmp_path):
    code, out = run(tmp_path, "verify", "--checks", "hardy", sub="h")
    assert code == 0 and [r["check"] for r in rows(out / "verify.csv")] == ["hardy"]
    code, out = run(tmp_path, "verify", "--inject-fault", "weight", sub="f")
    assert code == 4
    failed = [r["check"] for r in rows(out / "verify.csv") if r["passed"] == "false"]
    assert failed == ["quadrature"]


def test_pohozaev_identity(tmp_path):
    code, out = run(tmp_path, "pohozaev", "--p", "4", "--format", "csv,json,svg")
    assert code == 0
    rep = json.loads((out / "pohozaev.json").read_text())
    assert rep["mode"] == "identity" and rep["residual"] < 1e-2
    assert len(rows(out / "scan.csv")) == 10_000
    assert (out / "bracket2.svg").exists()


def test_pohozaev_probe(tmp_path):
    code, out = run(tmp_path, "pohozaev", "--p", "7")
    rep = json.loads((out / "pohozaev.json").read_text())
    assert code == 0 and rep["mode"] == "probe" and rep["tail_decreasing"]
    q = [rep[f"quotient_{i:02d}"] for i in range(12)]
    assert all(b < a for a, b in zip(q[-6:], q[-5:]))


def test_pohozaev_open_interval_flag(tmp_path):
    # 2_alpha^beta = 4 <= p = 5 < 2* = 6
    code, out = run(tmp_path, "pohozaev", "--alpha", "1", "--beta", "-1", "--p", "5")
    rep = json.loads((out / "pohozaev.json").read_text())
    assert code == 0 and rep["mode"] == "probe" and rep["open_interval"]


def test_pohozaev_hypothesis_warning(tmp_path, caplog):
    code, out = run(tmp_path, "pohozaev", "--alpha", "5", "--beta", "4", "--p", "8")
    rep = json.loads((out / "pohozaev.json").read_text())
    assert code == 0 and rep["hypothesis_ok"] is False and rep["mode"] == "probe"
    assert any("N >= alpha-1" in r.getMessage() for r in caplog.records)


def test_parse_range():
    assert parse_range("a=0:1:3") == ("a", [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        parse_range("a=0:1")


def test_sweep_grid_and_single_run_agree(tmp_path):
    code, out = run(tmp_path, "sweep", "--range", "a=0:0.4:5", "--range", "b=0:1:5", "--jobs", "2")
    assert code == 0
    table = rows(out / "sweep.csv")
    assert len(table) == 25 and [int(r["index"]) for r in table] == list(range(25))
    assert {r["status"] for r in table} == {"ok", "invalid"}
    cell = next(r for r in table if r["a"] == "0.0" and r["b"] == "1.0")
    _, single = run(tmp_path, "constant", "--a", "0", "--b", "1", sub="single")
    rep = json.loads((single / "constant.json").read_text())
    assert cell["floor"] == repr(rep["floor"]) and cell["estimate"] == repr(rep["estimate"])


def test_sweep_deterministic_and_resumable(tmp_path):
    args = ("sweep", "--range", "a=0:0.2:2", "--range", "b=0.5:1:2")
    _, a = run(tmp_path, *args, sub="a")
    _, b = run(tmp_path, *args, "--jobs", "2", sub="b")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    # a completed marker is trusted, a missing one is recomputed
    m0 = a / "cells" / "cell_00000.json"
    row = json.loads(m0.read_text())
    row["detail"] = "kept"
    m0.write_text(json.dumps(row))
    (a / "cells" / "cell_00003.json").unlink()
    run(tmp_path, *args, sub="a")
    table = rows(a / "sweep.csv")
    assert table[0]["detail"] == "kept"
    assert (a / "cells" / "cell_00003.json").exists() and table[3]["status"] == "ok"


def test_sweep_solve_cells_record_failures(tmp_path):
    code, out = run(tmp_path, "sweep", "--range", "q=3:7:3", "--grid-n", "256")
    table = rows(out / "sweep.csv")
    assert code == 0 and [r["status"] for r in table] == ["ok", "ok", "invalid"]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hypckn", "constant", "--a", "0", "--b", "3", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "violations" in res.stdout
