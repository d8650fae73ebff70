import csv
import json

import pytest

from upmsched.cli import CSV_COLUMNS, resolve_settings, build_parser, run_cli
from upmsched.instance import read_instance, write_instance
from support import t1


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture
def t1_file(tmp_path):
    path = tmp_path / "t1.json"
    write_instance(t1(1), path)
    return path


def test_gen_names_instance(tmp_path, capsys):
    code = run_cli(["gen", "--jobs", "50", "--machines", "5", "--tau", "0.5", "--alpha", "0",
                    "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    path = capsys.readouterr().out.strip()
    inst = read_instance(path)
    assert inst.name == "J50_M5_τ0.5_α0" and inst.R == 2


def test_gen_creates_missing_directory(tmp_path, capsys):
    target = tmp_path / "new" / "inst"
    code = run_cli(["gen", "--jobs", "6", "--machines", "2", "--seed", "3",
                    "--out", str(target) + "/"])
    assert code == 0
    path = capsys.readouterr().out.strip()
    assert read_instance(path).n_jobs == 6
    assert (target / "J6_M2_τ0.5_α0_s3.json").is_file()


def test_gen_rejects_bad_alpha(tmp_path, capsys):
    assert run_cli(["gen", "--jobs", "5", "--machines", "2", "--alpha", "7",
                    "--out", str(tmp_path)]) != 0
    assert "alpha" in capsys.readouterr().err


def test_solve_row(t1_file, capsys):
    code = run_cli(["solve", str(t1_file), "--alg", "alg2", "--mode", "iter",
                    "--objective", "sumT", "--time-limit", "60"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("# upmsched ") and "seed=0" in out.splitlines()[0]
    (row,) = rows(out)
    assert tuple(row) == CSV_COLUMNS
    assert row["gap_pct"] == "0.00" and row["UB"] == "2" and row["R"] == "1"


def test_solve_bnc_with_highs_fails(t1_file, capsys):
    assert run_cli(["solve", str(t1_file), "--mode", "bnc", "--backend", "highs"]) == 2
    assert "bnc" in capsys.readouterr().err


def test_unreadable_instance(tmp_path, capsys):
    assert run_cli(["solve", str(tmp_path / "missing.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_unknown_flag():
    assert run_cli(["solve", "x.json", "--frobnicate"]) != 0


def test_verify_round_trip_and_tamper(t1_file, tmp_path, capsys):
    sched = tmp_path / "sched.json"
    assert run_cli(["solve", str(t1_file), "--schedule-out", str(sched)]) == 0
    capsys.readouterr()
    assert run_cli(["verify", str(t1_file), str(sched)]) == 0
    assert capsys.readouterr().out.strip() == "ok"

    doc = json.loads(sched.read_text())
    for mach in doc["machines"]:
        second = mach[1]
        second["setup"] = [2, 5]
        second["process"] = [5, 7]
    sched.write_text(json.dumps(doc))
    assert run_cli(["verify", str(t1_file), str(sched)]) == 1
    assert "Cumulative" in capsys.readouterr().out


def test_oracle_command(t1_file, capsys):
    assert run_cli(["oracle", str(t1_file)]) == 0
    assert "value=21" in capsys.readouterr().out
    assert run_cli(["oracle", str(t1_file), "--R", "2"]) == 0
    assert "value=18" in capsys.readouterr().out


def test_oracle_refuses_big_instances(tmp_path, capsys):
    run_cli(["gen", "--jobs", "9", "--machines", "2", "--out", str(tmp_path)])
    path = capsys.readouterr().out.strip()
    assert run_cli(["oracle", path]) == 2
    assert "exceed" in capsys.readouterr().err


def test_bench_is_resumable(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    inst_dir.mkdir()
    write_instance(t1(1), inst_dir / "t1.json")
    out = tmp_path / "bench.csv"
    args = ["bench", str(inst_dir), "--out", str(out), "--algs", "alg1,alg2",
            "--objectives", "sumC", "--R", "1", "2"]
    assert run_cli(args) == 0
    first = rows(out.read_text())
    assert len(first) == 4
    assert {(r["alg"], r["R"], r["UB"]) for r in first} == {
        ("alg1", "1", "21"), ("alg2", "1", "21"), ("alg1", "2", "18"), ("alg2", "2", "18")}
    capsys.readouterr()
    assert run_cli(args) == 0
    assert "0 runs" in capsys.readouterr().out
    assert len(rows(out.read_text())) == 4


def test_bench_parallel(tmp_path):
    inst_dir = tmp_path / "inst"
    inst_dir.mkdir()
    write_instance(t1(1), inst_dir / "t1.json")
    out = tmp_path / "bench.csv"
    assert run_cli(["bench", str(inst_dir), "--out", str(out), "--jobs-parallel", "2"]) == 0
    assert len(rows(out.read_text())) == 4


def test_settings_precedence(tmp_path, monkeypatch):
    parser = build_parser()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"solver": {"backend": "highs", "time_limit_s": 5}}))
    monkeypatch.setenv("UPMSCHED_BACKEND", "fallback")

    args = parser.parse_args(["solve", "x.json"])
    assert resolve_settings(args) == {"backend": "fallback", "time_limit_s": 3600.0}

    args = parser.parse_args(["solve", "x.json", "--config", str(cfg)])
    assert resolve_settings(args) == {"backend": "highs", "time_limit_s": 5}

    args = parser.parse_args(["solve", "x.json", "--config", str(cfg), "--backend", "fallback",
                              "--time-limit", "7"])
    assert resolve_settings(args) == {"backend": "fallback", "time_limit_s": 7}


def test_bad_config_key(tmp_path, t1_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"solver": {"engine": "x"}}))
    assert run_cli(["solve", str(t1_file), "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err
