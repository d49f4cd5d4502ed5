import json
import subprocess
import sys
from pathlib import Path

import pytest

from odeinfer.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

OSC = """\
[experiment]
model = oscillator
seed = 4

[solver]
kind = rk54
rtol = 1e-3

[data]
forcing = step
f1 = 0.9
t_change = 25
n_points = 75
t_end = 50
sigma = 0.01

[scan]
param = k
lo = 0.95
hi = 1.05
n_points = 25

[mcmc]
n_chains = 2
n_iters = 60

[bound]
param = k
n_samples = 5
"""


def write_config(tmp_path, text=OSC, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def files(out: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.parametrize("task, expected", [
    ("simulate", {"simulate.csv"}),
    ("scan", {"surface.csv", "summary.json"}),
    ("diagnose", {"surface.csv", "diagnose.json"}),
    ("bound", {"bound.csv", "summary.json"}),
    ("mcmc", {"chain_0.csv", "chain_1.csv", "manifest.json"}),
])
def test_each_subcommand_runs(tmp_path, task, expected, capsys):
    out = tmp_path / "out"
    assert main([task, "--config", write_config(tmp_path), "--out", str(out)]) == EXIT_OK
    assert set(files(out)) == expected | {"config.resolved.ini"}
    json.loads(capsys.readouterr().out)


def test_surface_header_bit_exact(tmp_path):
    out = tmp_path / "out"
    main(["scan", "--config", write_config(tmp_path), "--out", str(out)])
    lines = (out / "surface.csv").read_text().splitlines()
    assert lines[0] == "param_value,log_likelihood,n_steps,flag" and len(lines) == 26


def test_chain_header_bit_exact(tmp_path):
    out = tmp_path / "out"
    main(["mcmc", "--config", write_config(tmp_path), "--out", str(out)])
    assert (out / "chain_0.csv").read_text().splitlines()[0] == "iter,m,c,k,sigma,log_post"


@pytest.mark.parametrize("task", ["scan", "mcmc", "bound"])
def test_repeat_runs_bitwise_identical(tmp_path, task):
    cfg = write_config(tmp_path)
    main([task, "--config", cfg, "--out", str(tmp_path / "a"), "--threads", "1"])
    main([task, "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "4"])
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path)
    main(["mcmc", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "4"])
    main(["mcmc", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "5"])
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["seed"] == 4 and mb["seed"] == 5
    assert (tmp_path / "a" / "chain_0.csv").read_bytes() != (tmp_path / "b" / "chain_0.csv").read_bytes()


def test_manifest_alone_reruns_experiment(tmp_path):
    main(["mcmc", "--config", write_config(tmp_path), "--out", str(tmp_path / "a")])
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    replay = write_config(tmp_path, manifest["config"], "replay.ini")
    main(["mcmc", "--config", replay, "--out", str(tmp_path / "b")])
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_resolved_config_echoes_defaults(tmp_path):
    out = tmp_path / "out"
    main(["scan", "--config", write_config(tmp_path), "--out", str(out), "--seed", "9"])
    text = (out / "config.resolved.ini").read_text()
    assert "task = scan" in text and "seed = 9" in text and "jump_threshold" in text


def test_validation_error_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, OSC + "[plot]\nwidth = 3\n")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    assert "plot" in capsys.readouterr().err


def test_bad_data_file_exit_code(tmp_path):
    (tmp_path / "cases.csv").write_text("date,cases\n2020-03-02,1\n2020-03-05,2\n")
    cfg = write_config(tmp_path, "[experiment]\nmodel = sir_changepoint\n[solver]\nkind = euler\n"
                                 "dt = 1\n[data]\nsource = cases.csv\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, OSC.replace("rtol = 1e-3", "rtol = 1e-3\nmax_steps = 3"))
    assert main(["scan", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_bad_seed_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["scan", "--config", write_config(tmp_path), "--out", str(tmp_path), "--seed", "-1"])
    assert exc.value.code != 0


def test_sir_simulate_writes_one_file_per_step(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(CONFIGS / "sir_simulate.ini"), "--out", str(out)]) == 0
    names = set(files(out))
    assert {"simulate_dt1.csv", "simulate_dt0.1.csv"} <= names
    head = (out / "simulate_dt1.csv").read_text().splitlines()[0]
    assert head == "day,S,I,R,new_infections,cases"


def test_console_entry_point(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "odeinfer.cli", "scan", "--config",
                           write_config(tmp_path), "--out", str(out)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["param"] == "k"
