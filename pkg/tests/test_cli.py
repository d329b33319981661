import csv
import json
import subprocess
import sys

import pytest

from driftrack.bench import Report
from driftrack.cli import main


def test_missing_config_names_path(tmp_path, capsys):
    path = tmp_path / "missing.json"
    code = main(["run", "--config", str(path)])
    assert code != 0
    assert "missing.json" in capsys.readouterr().err


def test_bad_flag_exits_with_usage():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--seeds", "0"])
    assert exc.value.code == 2


def test_console_entry_point_bad_flag():
    proc = subprocess.run([sys.executable, "-m", "driftrack.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr


def test_unknown_suite_is_an_error(capsys):
    assert main(["simulate", "--suite", "nope"]) != 0
    assert "nope" in capsys.readouterr().err


def test_simulate_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["simulate", "--suite", "recurrent5", "--out", str(a)]) == 0
    assert main(["simulate", "--suite", "recurrent5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    first = json.loads(a.read_text().splitlines()[0])
    assert set(first) == {"index", "candidates", "true_index", "is_ground_truth"}


def test_run_json_and_csv(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"suite": "abrupt3", "seeds": [0, 1], "num_frames": 80, "update_policy": "periodic:5"}))
    out_json, out_csv = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out_json)]) == 0
    assert main(["run", "--config", str(cfg), "--format", "csv", "--out", str(out_csv)]) == 0
    a = Report.from_json(out_json.read_text())
    b = Report.from_csv(out_csv.read_text())
    assert a == b
    assert a.config["update_policy"] == "periodic:5" and len(a.per_seed) == 2


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("DRIFTRACK_SEED", "100")
    out = tmp_path / "r.json"
    assert main(["run", "--suite", "stationary", "--seeds", "2", "--frames", "20", "--out", str(out)]) == 0
    assert [r.seed for r in Report.from_json(out.read_text()).per_seed] == [100, 101]
    monkeypatch.setenv("DRIFTRACK_SEED", "abc")
    assert main(["run", "--suite", "stationary", "--seeds", "1", "--frames", "20", "--out", str(out)]) != 0


def test_ablate_csv(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["ablate", "--suite", "abrupt3", "--seeds", "20", "--frames", "12", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 5
    assert all(r["seeds"] == "20" for r in rows)
    assert {"No replacement", "Random replacement", "Density replacement", "Score-discretised density"} <= set(rows[0])


def test_entropy_trace(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["entropy-trace", "--suite", "recurrent5", "--seeds", "1", "--frames", "201", "--out", str(out)]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["seed", "frame", "H_Y", "H_phi_given_Y", "H_joint"]
    assert [int(r[1]) for r in rows[1:]] == [50, 100, 150, 200]
    for r in rows[1:]:
        assert float(r[4]) == pytest.approx(float(r[2]) + float(r[3]))
