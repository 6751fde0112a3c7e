import json
import subprocess
import sys

import pytest

from edgecache.cli import main
from edgecache.harness import COLUMNS, load_results
from edgecache.indexcoding import instance_to_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_kendall_pair(capsys):
    code, out, _ = run(capsys, "kendall", "--a", "1,2,3,4", "--b", "3,4,1,2")
    assert code == 0 and out.strip() == "4"


def test_kendall_bad_input(capsys):
    code, _, err = run(capsys, "kendall", "--a", "1,1,2", "--b", "1,2,3")
    assert code == 2 and "bad ranking" in err
    code, _, _ = run(capsys, "kendall", "--a", "1,2")
    assert code == 2


def test_kendall_trace(tmp_path, capsys):
    path = tmp_path / "t.csv"
    path.write_text("slot,wcs,ranking\n0,0,0;1;2\n1,0,2;1;0\n")
    code, out, _ = run(capsys, "kendall", "--trace", str(path))
    assert code == 0
    assert out.splitlines() == ["slot,wcs,kendall", "1,0,3"]
    path.write_text("slot,wcs,ranking\n0,0,0;0\n")
    code, _, err = run(capsys, "kendall", "--trace", str(path))
    assert code == 1 and ":2:" in err


def test_simulate_writes_rows_and_sidecar(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, stdout, _ = run(
        capsys, "simulate", "--m", "30", "--n", "3", "--s", "5", "--slots", "5", "--seed", "7", "--out", str(out)
    )
    assert code == 0
    assert "config: " in stdout and "seed: 7" in stdout
    rows = load_results(out)
    assert len(rows) == 5 * 6
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert meta["config"]["seed"] == 7 and meta["columns"] == list(COLUMNS)


def test_simulate_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 25, "n": 2, "s": 4, "slots": 3, "schemes": ["uncoded", "mds"]}))
    code, stdout, _ = run(capsys, "simulate", "--config", str(cfg), "--n", "3")
    assert code == 0
    echoed = json.loads(stdout.splitlines()[0][len("config: "):])
    assert echoed["n"] == 3 and echoed["m"] == 25 and echoed["schemes"] == ["uncoded", "mds"]


def test_output_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("EDGECACHE_OUTPUT_DIR", str(tmp_path / "outdir"))
    code, _, _ = run(capsys, "simulate", "--m", "20", "--n", "2", "--s", "4", "--slots", "2", "--format", "json")
    assert code == 0
    assert (tmp_path / "outdir" / "simulate.json").exists()
    code, _, _ = run(capsys, "simulate", "--m", "20", "--n", "2", "--s", "4", "--slots", "2", "--out", "sub/x.csv")
    assert (tmp_path / "outdir" / "sub" / "x.csv").exists()


def test_usage_errors(capsys):
    assert run(capsys, "simulate", "--slots", "0")[0] == 2
    assert run(capsys, "simulate", "--schemes", "nope")[0] == 2
    assert run(capsys, "sweep", "--param", "p", "--values", "a,b")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 2


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sw.json"
    code, _, _ = run(
        capsys, "sweep", "--param", "n", "--values", "2,3", "--m", "25", "--s", "4", "--slots", "3",
        "--schemes", "uncoded,ic-dynamic-degeneracy", "--out", str(out), "--format", "json",
    )
    assert code == 0
    table = json.loads(out.read_text())
    assert [(r["value"], r["scheme"]) for r in table] == [
        (2, "uncoded"), (2, "ic-dynamic-degeneracy"), (3, "uncoded"), (3, "ic-dynamic-degeneracy"),
    ]
    assert json.loads((tmp_path / "sw.json.meta.json").read_text())["sweep"]["values"] == [2, 3]


def test_check_theorems(tmp_path, capsys):
    out = tmp_path / "h.json"
    code, stdout, _ = run(
        capsys, "check-theorems", "--which", "3", "--trials3", "3", "--n3", "10", "--c3", "4", "--s3", "8",
        "--beta1", "1.0", "--beta2", "2.5", "--out", str(out),
    )
    assert code == 0 and stdout.count("PASS") == 1
    assert json.loads(out.read_text())["histogram"]
    code, stdout, _ = run(capsys, "check-theorems", "--which", "2", "--trials", "20")
    assert code == 0 and "mds round-trip" in stdout
    code, _, _ = run(capsys, "check-theorems", "--which", "3", "--s3", "1")
    assert code == 2


def test_verify_plan(tmp_path, capsys, three_wcs):
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps(instance_to_json(three_wcs)))
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"transmissions": [[0, 2], [0, 1]]}))
    code, stdout, _ = run(capsys, "verify-plan", "--plan", str(plan), "--instance", str(inst))
    assert code == 0 and "OK" in stdout
    code, stdout, _ = run(capsys, "verify-plan", "--plan", str(plan), "--instance", str(inst), "--static")
    assert code == 1 and "FAIL" in stdout
    code, _, err = run(capsys, "verify-plan", "--plan", str(tmp_path / "missing.json"), "--instance", str(inst))
    assert code == 1 and "error" in err


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "edgecache", "kendall", "--a", "1,2,3,4", "--b", "3,4,1,2"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0 and res.stdout.strip() == "4"
