import json

import pytest

from oscine.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main, run_experiment
from oscine.config import ConfigError, load_config, parse_value


def test_parse_value():
    assert parse_value("0.5") == 0.5
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("abc") == "abc"


def test_config_layers(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('seed = 7\n[system]\nlam = 0.2\n')
    cfg = load_config("dilation", p, ["numerics.T=10.0"])
    assert cfg["seed"] == 7 and cfg["system"]["lam"] == 0.2 and cfg["numerics"]["T"] == 10.0
    assert cfg["numerics"]["dt"] == 0.25


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config("nope")
    with pytest.raises(ConfigError):
        load_config("dilation", overrides=["system.bogus=1"])
    with pytest.raises(ConfigError):
        load_config("dilation", overrides=["numerics.dt=-1"])
    p = tmp_path / "c.toml"
    p.write_text('experiment = "transport"\n')
    with pytest.raises(ConfigError):
        load_config("dilation", p)


def test_run_writes_artifacts(tmp_path):
    outcome, out = run_experiment("transport", out=tmp_path / "run")
    assert outcome.passed
    names = {p.name for p in out.iterdir()}
    assert names == {"transport.csv", "report.json", "manifest.json"}
    man = json.loads((out / "manifest.json").read_text())
    assert set(man) >= {"config", "versions", "checksums", "timestamp"}
    assert man["config"]["system"]["iota"] == 1.0
    assert (out / "transport.csv").read_text().startswith("t,x_norm,ratio,h1\n")


def test_exit_codes(tmp_path, capsys):
    assert main(["dilation", "--out", str(tmp_path / "a")]) == EXIT_PASS
    # A wrong target rate is a failed acceptance check, not an error.
    assert main(["dilation", "--set", "system.lam=0.5", "--set", "system.s=2", "--out", str(tmp_path / "b")]) in (EXIT_PASS, EXIT_FAIL)
    assert main(["stark-normform", "--set", "system.kappa=0.01", "--out", str(tmp_path / "c")]) == EXIT_FAIL
    assert main(["dilation", "--set", "system.lam=-1", "--out", str(tmp_path / "d")]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert json.loads(err)["error"] == "ValueError"
    assert (tmp_path / "d" / "error.json").exists()


def test_deterministic_csv(tmp_path):
    run_experiment("homological-suite", overrides=["system.n_inputs=5", "seed=3"], out=tmp_path / "a")
    run_experiment("homological-suite", overrides=["system.n_inputs=5", "seed=3"], out=tmp_path / "b")
    a = (tmp_path / "a" / "homological.csv").read_bytes()
    assert a == (tmp_path / "b" / "homological.csv").read_bytes()
