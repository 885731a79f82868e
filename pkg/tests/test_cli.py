import json
from pathlib import Path

import numpy as np
import pytest

from sqlab.cli import dumps, main, to_jsonable
from sqlab.config import parse_config
from sqlab.errors import ConfigError
from sqlab.scenarios import SCENARIOS, auto_step, fd_lowest_eigenvalue, schema_for

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


BASIS = "[scenario]\nname = basis-check\nseed = 1\n[parameters]\nfd_points = 2000\n"
SMALL_CE2 = (
    "[scenario]\nname = counterexample-2\nseed = 5\n"
    "[parameters]\ntruncation = 16\nn_mc = 20000\nn_residual = 20000\nmax_stderr = 1.0\n"
)


@pytest.mark.parametrize(
    "text,match",
    [
        ("[scenario]\nname = basis-check\n", "seed"),
        ("[scenario]\nname = nope\nseed = 1\n", "unknown scenario"),
        ("[scenario]\nname = basis-check\nseed = x\n", "integer"),
        ("[scenario]\nname = basis-check\nseed = -2\n", "nonnegative"),
        (BASIS + "bogus = 1\n", "unknown parameter"),
        (BASIS + "truncation = eight\n", "truncation"),
        (BASIS + "[extra]\n", "unknown sections"),
        ("[parameters]\nfd_points = 3\n", "missing"),
        ("no sections here", "parse"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text, schema_for)


def test_config_defaults_and_lists():
    cfg = parse_config(
        "[scenario]\nname = stationarity\nseed = 3\n[parameters]\ncoupling = 0 0 0 0 0.1  # quartic\n", schema_for
    )
    assert cfg.params["coupling"] == [0, 0, 0, 0, 0.1]
    assert cfg.params["truncation"] == SCENARIOS["stationarity"].params["truncation"].default


def test_shipped_configs_parse():
    files = sorted(CONFIGS.glob("*.ini"))
    names = {parse_config(f.read_text(), schema_for).name for f in files}
    assert names == set(SCENARIOS)


def test_json_sanitizing():
    out = to_jsonable({"a": np.float64("nan"), "b": [np.inf, -np.inf], "c": 1 + 2j, "d": np.arange(2)})
    assert out == {"a": "nan", "b": ["inf", "-inf"], "c": [1.0, 2.0], "d": [0, 1]}
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SCENARIOS:
        assert name in out


def test_run_pass_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, BASIS)
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "PASS basis-check:gram_identity" in out
    report = json.loads((tmp_path / "out" / "basis-check.json").read_text())
    assert report["passed"] and report["seed"] == 1
    meta = json.loads((tmp_path / "out" / "basis-check.meta.json").read_text())
    assert {"timestamp", "runtime_seconds"} <= set(meta)


def test_check_failure_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, BASIS + "eig_rtol = 1e-12\n")
    assert main(["run", str(cfg), "--output-dir", str(tmp_path), "--quiet"]) == 1
    err = capsys.readouterr().err
    assert "FAIL basis-check:dirichlet_lambda1" in err


def test_malformed_config_exit_2_without_outputs(tmp_path):
    cfg = write(tmp_path, "[scenario]\nname = basis-check\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--output-dir", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    assert main(["frobnicate"]) == 2


def test_invalid_parameters_exit_2(tmp_path):
    text = "[scenario]\nname = sq-simulate\nseed = 1\n[parameters]\ntruncation = 2\nstep = 1.0\nhorizon = 1.0\n"
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, text)), "--output-dir", str(out)]) == 2
    assert not any(out.iterdir())


def test_divergence_exit_3_without_outputs(tmp_path):
    text = (
        "[scenario]\nname = sq-simulate\nseed = 1\n[parameters]\ntruncation = 2\n"
        "coupling = 0 0 0 0 1e300\nhorizon = 1.0\nn_replicas = 2\n"
    )
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, text)), "--output-dir", str(out)]) == 3
    assert not any(out.iterdir())


def test_seed_override_and_determinism(tmp_path):
    cfg = write(tmp_path, SMALL_CE2)
    for d in ("a", "b"):
        assert main(["run", str(cfg), "--output-dir", str(tmp_path / d), "--quiet"]) == 0
    a = (tmp_path / "a" / "counterexample-2.json").read_bytes()
    assert a == (tmp_path / "b" / "counterexample-2.json").read_bytes()
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "c"), "--quiet", "--seed", "6"]) == 0
    c = (tmp_path / "c" / "counterexample-2.json").read_bytes()
    assert c != a and json.loads(c)["seed"] == 6


def test_csv_trajectory_format(tmp_path):
    text = (
        "[scenario]\nname = sq-simulate\nseed = 1\n[parameters]\ntruncation = 2\nhorizon = 1.0\n"
        "n_replicas = 2\nrecord_every = 5\ncsv_modes = 1 2\n"
    )
    assert main(["run", str(write(tmp_path, text)), "--output-dir", str(tmp_path), "--quiet"]) in (0, 1)
    raw = (tmp_path / "sq-simulate.trajectory.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "time,replica,mode:1,mode:2,mode2:1,mode2:2"
    assert all(len(line.split(",")) == 6 for line in lines)


def test_auto_step_respects_guard_and_divides_horizon():
    h = auto_step(243.1, 60.0, 0.5)
    assert h <= 0.5 / 243.1
    n = 60.0 / h
    assert abs(n - round(n)) < 1e-9


def test_fd_eigenvalue_oracle():
    assert fd_lowest_eigenvalue("dirichlet", 4000) == pytest.approx(np.pi**2, rel=1e-6)
    assert fd_lowest_eigenvalue("mixed", 4000) == pytest.approx(np.pi**2 / 4, rel=1e-6)
