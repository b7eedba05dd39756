import json
import subprocess
import sys

import pytest

from padicft.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, RunConfig, main, validate, ConfigError

BASE = ["--p", "3", "--N", "1", "--l", "1"]


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out), "--json"])
    return code, out


def csvs(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def test_missing_p_is_named(tmp_path, capsys):
    code, _ = run(tmp_path, "operator", "--N", "1", "--l", "1")
    assert code == EXIT_CONFIG
    msg = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert any(p.startswith("p:") for p in msg["problems"])


def test_errors_are_aggregated():
    cfg = RunConfig(p=4, N=1, l=0, delta=0.5, gamma=-1.0, batches=4)
    with pytest.raises(ConfigError) as exc:
        validate(cfg, "partition")
    names = {p.split(":")[0] for p in exc.value.problems}
    assert {"p", "l", "delta", "gamma", "batches"} <= names


def test_delta_le_N_rejected(tmp_path):
    code, _ = run(tmp_path, "operator", *BASE, "--delta", "1.0")
    assert code == EXIT_CONFIG


def test_measure_needs_positive_mass(tmp_path):
    code, _ = run(tmp_path, "sample", *BASE, "--alpha2", "0")
    assert code == EXIT_CONFIG


def test_defaults_fill_delta():
    cfg = validate(RunConfig(p=3, N=2, l=1), "operator")
    assert cfg.delta == 4.0 and cfg.kernel == "power" and cfg.batches == 32


def test_config_file_sections(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"lattice": {"p": 3, "N": 1, "l": 1}, "couplings": {"gamma": 2.0, "alpha2": 2.0}, "kernel": {"delta": 2.0}}))
    code, out = run(tmp_path, "propagator", "--config", str(path))
    assert code == EXIT_OK
    rows = (out / "propagator.csv").read_text().splitlines()
    assert rows[0].startswith("norm_exponent")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["gamma"] == 2.0 and manifest["status"] == "ok"
    bad = tmp_path / "bad.json"
    bad.write_text('{"lattice": {"p": 3,}}')
    code, _ = run(tmp_path, "propagator", "--config", str(bad), name="bad")
    assert code == EXIT_CONFIG
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"lattice": {"p": 3, "N": 1, "l": 1, "q": 2}}')
    code, _ = run(tmp_path, "propagator", "--config", str(unknown), name="unknown")
    assert code == EXIT_CONFIG


def test_flags_override_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"p": 5, "N": 1, "l": 1}))
    code, out = run(tmp_path, "operator", "--config", str(path), "--p", "3")
    assert code == EXIT_OK
    assert json.loads((out / "manifest.json").read_text())["config"]["p"] == 3


def test_capacity_exit_code(tmp_path):
    code, out = run(tmp_path, "operator", "--p", "3", "--N", "2", "--l", "2")
    assert code == EXIT_CAPACITY
    assert json.loads((out / "manifest.json").read_text())["status"] == "capacity"


def test_numerical_failure_exit_code(tmp_path):
    # one iteration cannot converge; minimize reports that as a numerical failure
    code, _ = run(tmp_path, "minimize", *BASE, "--T=-1", "--max-iter", "1", "--init-noise", "0.5")
    assert code == EXIT_NUMERICAL


@pytest.mark.parametrize(
    "cmd,extra",
    [
        ("operator", []),
        ("spectrum", []),
        ("propagator", ["--gamma", "2", "--alpha2", "2"]),
        ("sample", ["--n", "200", "--seed", "3"]),
        ("correlate", ["--n", "2000", "--seed", "4", "--points", "0,0"]),
        ("correlate", ["--n", "2000", "--seed", "4", "--free"]),
        ("partition", ["--n", "2000", "--seed", "5", "--alpha4", "0.1"]),
        ("perturb", ["--n", "2000", "--seed", "6", "--alpha4", "0.05"]),
        ("minimize", ["--T=-1", "--init-noise", "0.1", "--seed", "7"]),
        ("sweep", ["--gamma", "0.4", "--T-grid=-1,-0.5,0.5,1"]),
    ],
)
def test_commands_are_deterministic(cmd, extra, tmp_path):
    c1, o1 = run(tmp_path, cmd, *BASE, *extra, name="a")
    c2, o2 = run(tmp_path, cmd, *BASE, *extra, name="b")
    assert c1 == c2 == EXIT_OK
    a, b = csvs(o1), csvs(o2)
    assert a and a == b
    m1 = json.loads((o1 / "manifest.json").read_text())
    assert m1["outputs"] == json.loads((o2 / "manifest.json").read_text())["outputs"]


def test_sample_seed_changes_output(tmp_path):
    _, o1 = run(tmp_path, "sample", *BASE, "--n", "50", "--seed", "1", name="a")
    _, o2 = run(tmp_path, "sample", *BASE, "--n", "50", "--seed", "2", name="b")
    assert csvs(o1)["samples.csv"] != csvs(o2)["samples.csv"]


def test_selftest_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "padicft.cli", "selftest", "--out", str(tmp_path / "st"), "--json"],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    payload = json.loads(proc.stdout.strip().splitlines()[-1])
    assert payload["summary"]["failed"] == 0
