import json
import os

import pytest

from mshedge.cli import main


def _read(path):
    with open(path) as f:
        return f.read()


def test_gen_solve_roundtrip_two_stage(tmp_path, capsys):
    inst_file = str(tmp_path / "inst.json")
    assert main(["gen", "two-stage", "-m", "4", "--n0", "2", "--n1", "2",
                 "--seed", "7", "--out", inst_file]) == 0
    assert os.path.exists(inst_file)

    out_dir = str(tmp_path / "run")
    code = main(["solve", inst_file, "--variant", "inertial", "--tol", "1e-3",
                 "--out-dir", out_dir])
    assert code == 0
    summary = json.loads(_read(os.path.join(out_dir, "summary.json")))
    assert summary["status"] == "converged"
    assert summary["final_err"] < 1e-3
    trace = _read(os.path.join(out_dir, "trace.csv")).strip().split("\n")
    assert trace[0] == "k,err,e_norm,theta,alpha,beta,eps,inner_iters,elapsed_ms"
    assert len(trace) == summary["outer_iters"] + 2
    printed = json.loads(capsys.readouterr().out.strip().split("\n")[-1])
    assert printed["status"] == "converged"


def test_gen_solve_roundtrip_control(tmp_path):
    inst_file = str(tmp_path / "ctrl.json")
    assert main(["gen", "control", "--stages", "2", "--substeps", "2",
                 "--samples", "0", "--out", inst_file]) == 0
    out_dir = str(tmp_path / "run")
    assert main(["solve", inst_file, "--tol", "1e-2", "--out-dir", out_dir,
                 "--format", "csv"]) == 0
    assert json.loads(_read(os.path.join(out_dir, "summary.json")))["status"] == "converged"


def test_gen_determinism_and_seed_precedence(tmp_path, monkeypatch):
    a, b, c, d = (str(tmp_path / f"{x}.json") for x in "abcd")
    main(["gen", "two-stage", "--seed", "5", "--out", a])
    main(["gen", "two-stage", "--seed", "5", "--out", b])
    assert _read(a) == _read(b)

    # env seed applies when the flag is absent...
    monkeypatch.setenv("MSHEDGE_SEED", "5")
    main(["gen", "two-stage", "--out", c])
    assert _read(c) == _read(a)
    # ...but the flag wins over the env
    main(["gen", "two-stage", "--seed", "6", "--out", d])
    assert _read(d) != _read(a)


def test_solve_determinism_excluding_timing(tmp_path):
    inst_file = str(tmp_path / "inst.json")
    main(["gen", "two-stage", "-m", "3", "--n0", "2", "--n1", "2",
          "--seed", "1", "--out", inst_file])
    dirs = [str(tmp_path / "r1"), str(tmp_path / "r2")]
    for d in dirs:
        assert main(["solve", inst_file, "--tol", "1e-3", "--out-dir", d]) == 0

    def strip_timing_csv(text):
        rows = [line.split(",") for line in text.strip().split("\n")]
        return [row[:-1] for row in rows]  # drop elapsed_ms

    assert strip_timing_csv(_read(os.path.join(dirs[0], "trace.csv"))) == \
        strip_timing_csv(_read(os.path.join(dirs[1], "trace.csv")))

    summaries = [json.loads(_read(os.path.join(d, "summary.json"))) for d in dirs]
    for s in summaries:
        s.pop("wall_ms")
    assert summaries[0] == summaries[1]


def test_bench_command(tmp_path):
    plan = {
        "cells": [
            {
                "instance": {"kind": "two-stage", "m": 3, "n0": 2, "n1": 2, "seed": 50},
                "variant": "inertial",
                "tol": 1e-3,
                "reps": 2,
            }
        ]
    }
    plan_file = str(tmp_path / "plan.json")
    with open(plan_file, "w") as f:
        json.dump(plan, f)
    out_dir = str(tmp_path / "bench")
    assert main(["bench", plan_file, "--out-dir", out_dir]) == 0
    table = _read(os.path.join(out_dir, "table.csv")).strip().split("\n")
    assert table[0] == "variant,instance,eps,avg_iter,avg_time_ms,reps,failures"
    assert len(table) == 2
    runs = os.listdir(os.path.join(out_dir, "runs"))
    assert sorted(runs) == [
        "cell000_rep00.summary.json",
        "cell000_rep00.trace.csv",
        "cell000_rep01.summary.json",
        "cell000_rep01.trace.csv",
    ]


def test_equiv_command(tmp_path, capsys):
    inst_file = str(tmp_path / "inst.json")
    main(["gen", "two-stage", "-m", "3", "--n0", "2", "--n1", "2",
          "--seed", "3", "--out", inst_file])
    assert main(["equiv", inst_file, "--steps", "30"]) == 0
    deviation = float(capsys.readouterr().out.strip().split("\n")[-1])
    assert deviation <= 1e-7


def test_malformed_inputs_exit_nonzero(tmp_path, capsys):
    bad = str(tmp_path / "bad.json")
    with open(bad, "w") as f:
        f.write("{not json")
    assert main(["solve", bad]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    assert main(["bench", bad]) == 2
    with open(bad, "w") as f:
        f.write('{"cells": [{"instance": {"kind": "nope"}}]}')
    assert main(["bench", bad]) == 2


def test_gen_invalid_config_errors(tmp_path, capsys):
    # enumeration cap exceeded
    assert main(["gen", "control", "--stages", "5", "--substeps", "20",
                 "--samples", "0", "--out", str(tmp_path / "x.json")]) == 2
    assert "cap" in capsys.readouterr().err
