from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from dimlab.cli import ExperimentConfig, atomic_write, csv_text, main, run_experiment
from dimlab.errors import ConfigError

SHORT = {"r1": 64, "ratio": 1.3, "r_max": 2048}


def run_cli(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_dim_all_zero(tmp_path, capsys):
    code = run_cli("dim", "--point", '{"kind": "AllZero"}', "--r-max", 2048, "--out", tmp_path)
    assert code == 0
    out = capsys.readouterr().out
    lower = float(out.split()[0].split("=")[1])
    assert lower <= 0.05
    rows = read_csv(tmp_path / "dim.csv")
    assert rows[0] == ["r", "value", "ratio"] and len(rows) > 12
    rep = json.loads((tmp_path / "report.json").read_text())
    # the effective config carries every default
    assert rep["config"]["schedule"]["mode"] == "identity"
    assert rep["config"]["point"]["seed"] == 0
    assert rep["config"]["params"] == {"window": None}
    assert rep["passed"] is True and rep["wall_clock"] >= 0


def test_run_config_file_and_tolerances(tmp_path):
    cfg = {"command": "dim", "seed": 3, "point": {"kind": "Bernoulli"}, "schedule": SHORT,
           "tolerances": {"lower": [0.0, 0.5]}, "out": str(tmp_path / "o")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    # a fair coin has dimension near one, so the lower-bound range check fails
    assert run_cli("run", "--config", path) == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["checks"] == {"lower_in_range": False}


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("run", "--config", bad) == 2
    assert "ConfigError" in capsys.readouterr().err
    assert run_cli("dim", "--point", "{oops") == 2


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "dim"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "teleport", "seed": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "dim", "seed": 1, "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "dim", "seed": "1"})
    cfg = ExperimentConfig.from_dict({"command": "box-dim", "seed": 1, "params": {"bogus": 1}})
    with pytest.raises(ConfigError):
        cfg.resolved()


def test_usage_errors_exit_2(capsys):
    assert run_cli("nonsense") == 2
    assert run_cli("kakeya-reconstruct", "--r", 3) == 2
    assert run_cli("dim", "--point", '{"kind": "Nope"}') == 2


def test_kakeya_reconstruct(tmp_path, capsys):
    code = run_cli("kakeya-reconstruct", "--r", 3, "--m", "0.5", "--b", "0.25", "--x", "0.5", "--h", 5,
                   "--out", tmp_path)
    assert code == 0
    assert capsys.readouterr().out.strip() == "u=1/2 v=1/4 p=1/2 (i=4)"
    assert run_cli("kakeya-reconstruct", "--r", 3, "--m", "0.5", "--b", "0.25", "--x", "0.5", "--h", 10,
                   "--out", tmp_path) == 1
    assert "NoSuchCandidate" in capsys.readouterr().err


def test_kakeya_stats_csv(tmp_path):
    assert run_cli("kakeya-stats", "--r", 8, "--trials", 300, "--seed", 2, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "kakeya_stats.csv")
    assert rows[0] == ["trial", "x", "h", "log2h_over_r"]
    assert len(rows) == 301
    mean = sum(int(r[2]) for r in rows[1:]) / 300
    assert mean <= 8 * 64


def test_machine_k(capsys):
    assert run_cli("machine-k", "--w", "0000") == 0
    assert capsys.readouterr().out.strip() == "11"
    assert run_cli("machine-k", "--w", "1010", "--v", "1010") == 0
    assert capsys.readouterr().out.strip() == "8"
    assert run_cli("machine-k", "--w", "0110100110010110", "--max-len", "8") == 0
    assert capsys.readouterr().out.strip() == "none"
    assert run_cli("machine-k", "--w", "012") == 2


def test_set_commands(tmp_path, capsys):
    sq = '{"kind": "UnitCube"}'
    assert run_cli("box-dim", "--set", sq, "--count", 2000, "--out", tmp_path) == 0
    assert read_csv(tmp_path / "box_dim.csv")[0] == ["r", "cells"]
    assert run_cli("cover", "--set", sq, "--count", 50, "--s", 2, "--r", 5, "--slack-bits", 24,
                   "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["checks"] == {"cardinality": True} and rep["results"]["uncovered"] == 0
    assert run_cli("packing", "--set", sq, "--count", 500, "--delta", 0, 3, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "packing.csv")
    assert [r[0] for r in rows] == ["delta_exp", "0", "3"]


def test_pair_commands(tmp_path):
    pair = '{"kind": "JointCopy", "dim": 2}'
    for cmd in ("cond-dim", "mdim"):
        assert run_cli(cmd, "--point", pair, "--r-max", 2048, "--out", tmp_path) == 0
    assert run_cli("audit", "--point", pair, "--r-max", 2048, "--audits", "identities", "sensitivity",
                   "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "audit.csv")
    assert rows[0][0] == "r" and "chain_residual" in rows[0]
    assert run_cli("cond-dim", "--r-max", 2048, "--out", tmp_path) == 2


@pytest.mark.parametrize("cfg", [
    {"command": "dim", "seed": 5, "point": {"kind": "Bernoulli", "params": {"p": 0.3}}, "schedule": SHORT},
    {"command": "kakeya-stats", "seed": 1, "params": {"r": 6, "trials": 100}},
    {"command": "box-dim", "seed": 2, "set": {"kind": "CantorMiddleThirds"}, "params": {"count": 500}},
])
def test_byte_identical_reruns(tmp_path, cfg):
    bodies = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        rep = run_experiment(ExperimentConfig.from_dict({**cfg, "out": str(out)}))
        bodies.append({p.split("/")[-1]: open(p, "rb").read() for p in rep.csv_paths})
    assert bodies[0] == bodies[1]


def test_threads_do_not_change_output(tmp_path):
    base = {"command": "dim", "seed": 5, "point": {"kind": "Bernoulli"}, "schedule": SHORT}
    a = run_experiment(ExperimentConfig.from_dict({**base, "out": str(tmp_path / "a"), "threads": 1}))
    b = run_experiment(ExperimentConfig.from_dict({**base, "out": str(tmp_path / "b"), "threads": 4}))
    assert open(a.csv_paths[0], "rb").read() == open(b.csv_paths[0], "rb").read()


def test_atomic_write_and_csv_text(tmp_path):
    p = tmp_path / "sub" / "f.csv"
    atomic_write(str(p), csv_text(["a", "b"], [(1, 0.5), (2, 1 / 3)]))
    assert p.read_text() == "a,b\n1,0.5\n2,0.3333333333333333\n"
    assert [q.name for q in (tmp_path / "sub").iterdir()] == ["f.csv"]


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "dimlab.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("dimlab ")
