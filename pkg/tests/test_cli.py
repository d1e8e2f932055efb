"""End-to-end command behavior: file formats, determinism, config handling."""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from cwsoc import cli
from cwsoc.hs_oracle import g

SAMPLES_HEADER = "chain,index,stat_self_normalized,stat_scaled_sum,t_over_n"
PROFILE_HEADER = "z,value,std_error"


def run_cli(*args):
    return cli.main([str(a) for a in args])


def test_simulate_files(tmp_path):
    out = tmp_path / "sim"
    rc = run_cli(
        "simulate", "--measure", "gaussian:1.0", "--n", 50, "--sweeps", 3000,
        "--burn-in", 500, "--thin", 5, "--chains", 2, "--seed", 4, "--out", out,
    )
    assert rc == 0
    lines = (out / "samples.csv").read_text().splitlines()
    assert lines[0] == SAMPLES_HEADER
    retained = (3000 - 500) // 5
    assert len(lines) == 1 + 2 * retained
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0"
    # second chain restarts its index at 0
    assert lines[1 + retained].split(",")[0] == "1"
    assert lines[1 + retained].split(",")[1] == "0"
    # float cells round-trip through repr
    for cell in lines[1].split(",")[2:]:
        assert repr(float(cell)) == cell

    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"chains", "config", "ks", "laws", "pooled"}
    assert summary["config"]["command"] == "simulate"
    assert "threads" not in summary["config"]
    assert summary["config"]["thin"] == 5
    assert len(summary["chains"]) == 2
    assert summary["chains"][1]["retained_samples"] == retained
    assert {"theorem1", "theorem2"} == set(summary["laws"])
    ks = summary["ks"]["self_normalized_vs_theorem1"]
    assert 0.0 <= ks["statistic"] <= 1.0
    assert ks["threshold_ks95_at_ess"] > 0.0


def test_simulate_deterministic_across_threads(tmp_path):
    args = ["simulate", "--measure", "rademacher", "--n", 30, "--sweeps", 2000,
            "--burn-in", 100, "--chains", 2, "--seed", 9]
    assert run_cli(*args, "--threads", 1, "--out", tmp_path / "a") == 0
    assert run_cli(*args, "--threads", 3, "--out", tmp_path / "b") == 0
    for name in ("samples.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_oracle_files_and_n1_exactness(tmp_path):
    out = tmp_path / "or"
    rc = run_cli(
        "oracle", "--measure", "uniform:1.0", "--n", 1, "--mc-draws", 40,
        "--z-min", -2, "--z-max", 2, "--z-steps", 9, "--seed", 3, "--out", out,
    )
    assert rc == 0
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[0] == PROFILE_HEADER
    assert len(lines) == 10
    for row in lines[1:]:
        z, v, e = (float(c) for c in row.split(","))
        assert abs(v - math.exp(g(z))) <= 1e-15
        assert e == 0.0
    norm_lines = (out / "profile_normalized.csv").read_text().splitlines()
    assert norm_lines[0] == PROFILE_HEADER
    pr = json.loads((out / "partition_ratio.json").read_text())
    assert {"estimate", "std_error", "limit_target"} <= set(pr)
    assert pr["std_error"] == 0.0
    assert pr["mc_draws"] == 0
    assert abs(pr["estimate"] - 4.132731354122493) < 1e-8


def test_oracle_deterministic_across_threads(tmp_path):
    args = ["oracle", "--measure", "gaussian:1.0", "--n", 40, "--mc-draws", 1500, "--seed", 6]
    assert run_cli(*args, "--threads", 1, "--out", tmp_path / "a") == 0
    assert run_cli(*args, "--threads", 4, "--out", tmp_path / "b") == 0
    for name in ("profile.csv", "profile_normalized.csv", "partition_ratio.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_enumerate_file(tmp_path):
    rc = run_cli("enumerate", "--measure", "rademacher", "--n", 2, "--out", tmp_path)
    assert rc == 0
    lines = (tmp_path / "exact.csv").read_text().splitlines()
    assert lines[0] == "value,probability"
    rows = [tuple(float(c) for c in r.split(",")) for r in lines[1:]]
    values = [r[0] for r in rows]
    probs = [r[1] for r in rows]
    assert values == sorted(values)
    assert np.allclose(values, [-math.sqrt(2), 0.0, math.sqrt(2)])
    e = math.e
    assert np.allclose(probs, [e / (2 * e + 2), 1 / (e + 1), e / (2 * e + 2)])


def test_limit_law_output(capsys):
    rc = run_cli("limit-law", "--measure", "gaussian:1.0",
                 "--z-min", -2, "--z-max", 2, "--z-steps", 5)
    assert rc == 0
    text = capsys.readouterr().out
    assert "a = 0.25" in text
    assert "source_theorem = theorem1" in text
    assert "source_theorem = theorem2" in text
    assert "quantiles:" in text
    # pdf table carries one row per grid point
    assert len([l for l in text.splitlines() if l.startswith(("-", "0.0,", "1.0,", "2.0,"))]) >= 5


def test_verify_subcommand_writes_report(tmp_path):
    rc = run_cli("verify", "--criteria", "AC8,AC10", "--seed", 1, "--out", tmp_path)
    assert rc == 0
    report = json.loads((tmp_path / "report.json").read_text())
    ids = [r["id"] for r in report["criteria"]]
    assert ids == ["AC8", "AC10"]
    assert report["all_passed"] is True
    assert all(r["passed"] for r in report["criteria"])


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# base settings\n"
        "measure = rademacher\n"
        "n=16\n"
        "burn-in = 50   # dash form\n"
        "sweeps = 1200\n"
    )
    out = tmp_path / "out"
    rc = run_cli("simulate", "--config", cfg, "--n", 20, "--out", out)
    assert rc == 0
    echo = json.loads((out / "summary.json").read_text())["config"]
    assert echo["n"] == 20          # explicit flag wins
    assert echo["burn_in"] == 50    # file value
    assert echo["sweeps"] == 1200
    assert echo["measure"] == "rademacher"
    assert echo["chains"] == 2      # hard default


@pytest.mark.parametrize(
    "args",
    [
        ("simulate", "--measure", "nope:1"),
        ("simulate", "--measure", "gaussian:1.0", "--n", "0"),
        ("simulate", "--measure", "gaussian:1.0", "--sweeps", "80"),
        ("enumerate", "--measure", "gaussian:1.0", "--n", "4"),
        ("enumerate", "--measure", "rademacher", "--n", "25"),
        ("oracle", "--measure", "rademacher", "--z-steps", "2"),
        ("oracle", "--measure", "rademacher", "--z-min", "3", "--z-max", "-3"),
        ("simulate", "--n", "notanint"),
    ],
)
def test_usage_errors_exit_2(tmp_path, args):
    assert run_cli(*args, "--out", tmp_path) == 2


def test_config_file_errors(tmp_path):
    missing = run_cli("simulate", "--config", tmp_path / "nope.cfg", "--out", tmp_path)
    assert missing == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("sweeps 100\n")
    assert run_cli("simulate", "--config", bad, "--out", tmp_path) == 2
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("mc-draws = 50\n")  # not a simulate key
    assert run_cli("simulate", "--config", unknown, "--out", tmp_path) == 2


def test_jsonify_numpy_types():
    obj = {
        "a": np.float64(1.5),
        "b": np.int32(3),
        "c": np.bool_(True),
        "d": np.array([1.0, 2.0]),
        "e": [np.float64(0.25), {"f": np.int64(9)}],
    }
    got = cli.jsonify(obj)
    assert got == {"a": 1.5, "b": 3, "c": True, "d": [1.0, 2.0], "e": [0.25, {"f": 9}]}
    json.dumps(got)


def test_write_json_format(tmp_path):
    path = tmp_path / "x.json"
    cli.write_json(path, {"b": 1, "a": np.float64(2.0)})
    text = path.read_text()
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')


def test_write_csv_line_endings(tmp_path):
    path = tmp_path / "x.csv"
    cli.write_csv(path, "h1,h2", [("1", "2"), ("3", "4")])
    raw = path.read_bytes()
    assert raw == b"h1,h2\n1,2\n3,4\n"
    assert b"\r" not in raw


def test_fmt_round_trip():
    for x in (1 / 3, 1e-17, -0.0, 2.5636933520408476, 1e300, 7.0):
        assert float(cli.fmt(x)) == x


def test_module_entry_point(tmp_path):
    p = subprocess.run(
        [sys.executable, "-m", "cwsoc.cli", "enumerate", "--measure", "rademacher",
         "--n", "2", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert p.returncode == 0
    assert (tmp_path / "exact.csv").exists()


def test_python_fallback_kernel_matches_jit(tmp_path):
    # identical stream consumption: the pure-python kernel must reproduce the
    # jit run byte for byte on a small chain
    args = ["simulate", "--measure", "gaussian:1.0", "--n", "8", "--sweeps", "150",
            "--burn-in", "10", "--chains", "1", "--seed", "2"]
    assert run_cli(*args, "--out", tmp_path / "jit") == 0
    env = dict(os.environ, CWSOC_DISABLE_NUMBA="1")
    p = subprocess.run(
        [sys.executable, "-m", "cwsoc.cli", *args, "--out", str(tmp_path / "py")],
        capture_output=True, text=True, env=env,
    )
    assert p.returncode == 0, p.stderr
    assert (tmp_path / "jit" / "samples.csv").read_bytes() == (tmp_path / "py" / "samples.csv").read_bytes()
