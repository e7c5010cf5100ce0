import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyson_edge.cli import main
from dyson_edge.core import GtArray
from dyson_edge.ensemble import sample_corners_process
from dyson_edge.errors import ConfigError, DomainError, InterlacingError, StructuralError
from dyson_edge.io import (
    RunManifest,
    array_from_csv,
    array_to_csv,
    format_float,
    parse_config_text,
    read_array_csv,
    write_array_csv,
)
from dyson_edge.rng import stream

SIM = {"beta": 4, "t0": 0.5, "n": 8, "k": 2, "dt": 1e-3, "horizon": 0.05, "n_samples": 5, "seed": 3}


@given(v=st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(v):
    assert float(format_float(v)) == v


def test_non_finite_not_serialized():
    with pytest.raises(DomainError):
        format_float(math.inf)


@given(n=st.integers(1, 10), beta=st.floats(1.0, 8.0), seed=st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_array_csv_round_trip(n, beta, seed):
    a = sample_corners_process(n, beta, float(n), stream(seed))
    assert array_from_csv(array_to_csv(a)) == a


def test_array_csv_file(tmp_path):
    a = GtArray(([0.0], [-1.5, 2.25]))
    write_array_csv(a, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_bytes() == b"0.0\n-1.5,2.25\n"
    assert read_array_csv(tmp_path / "a.csv") == a


def test_array_csv_errors():
    with pytest.raises(StructuralError, match="row 2 has 1"):
        array_from_csv("0.0\n1.0\n")
    with pytest.raises(StructuralError, match="empty"):
        array_from_csv("")
    with pytest.raises(InterlacingError):
        array_from_csv("5.0\n-1.0,1.0\n")


def parse(doc, command="simulate-mdbm"):
    return parse_config_text(doc if isinstance(doc, str) else json.dumps(doc), command)


def test_defaults_are_resolved():
    cfg = parse({"beta": 4, "t0": 0.5, "n": 10})
    assert cfg.sim.k == 1 and cfg.sim.dt == 1e-4 and cfg.sim.n_samples == 1000 and cfg.sim.seed == 0
    assert cfg.options == {"observation_times": [0.0, 1.0], "scheme": "implicit", "source": "tridiagonal"}
    assert cfg.with_seed(9).sim.seed == 9


@pytest.mark.parametrize(
    "doc,match",
    [
        ('{"beta": 4, "beta": 5, "t0": 1, "n": 3}', "duplicate key"),
        ('{"beta": NaN, "t0": 1, "n": 3}', "non-finite"),
        ('{"beta": 4, "t0": 1}', "missing required"),
        ('{"beta": 4, "t0": 1, "n": 3, "colour": 1}', "unknown field"),
        ('{"beta": "4", "t0": 1, "n": 3}', "field 'beta'"),
        ('{"beta": 4, "t0": 1, "n": 3.5}', "field 'n'"),
        ('{"beta": 2, "t0": 1, "n": 3}', "requires beta >= 4"),
        ('{"beta": 4, "t0": 1, "n": 3, "scheme": "rk4"}', "field 'scheme'"),
        ('{"beta": 4, "t0": 1, "n": 3, "observation_times": [0.5, 0.1]}', "nondecreasing"),
        ('{"beta": 4, "t0": 1, "n": 3, "k": 3}', "exceeds"),
        ("[1, 2]", "JSON object"),
        ("{", "invalid JSON"),
    ],
)
def test_config_errors(doc, match):
    with pytest.raises(ConfigError, match=match):
        parse(doc)


def test_dense_source_constraints():
    parse({"beta": 2, "t0": 1.0, "n": 5, "source": "dense"}, "sample-ensemble")
    with pytest.raises(ConfigError, match="dense"):
        parse({"beta": 2, "t0": 0.5, "n": 5, "source": "dense"}, "sample-ensemble")


def run_cli(tmp_path, command, doc, *extra):
    cfg = tmp_path / f"{command}.json"
    cfg.write_text(json.dumps(doc))
    return main([command, "--config", str(cfg), *extra])


@pytest.mark.parametrize("command", ["sample-ensemble", "sample-corners", "simulate-mdbm", "simulate-limit"])
def test_cli_output_independent_of_parallelism(tmp_path, command):
    outputs = []
    for p in ("1", "8"):
        out = tmp_path / f"out{p}"
        assert run_cli(tmp_path, command, SIM, "--out", str(out), "--parallelism", p) == 0
        files = sorted(f for f in out.rglob("*.csv"))
        outputs.append({f.relative_to(out).as_posix(): f.read_bytes() for f in files})
        manifest = RunManifest.read(out / "manifest.json")
        assert manifest.parallelism == int(p) and manifest.exit_code == 0
        assert len(manifest.unit_seeds) == SIM["n_samples"]
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) >= 1


def test_cli_trajectory_format(tmp_path):
    assert run_cli(tmp_path, "simulate-limit", SIM, "--out", str(tmp_path / "o")) == 0
    lines = (tmp_path / "o" / "trajectories" / "path_000000.csv").read_text().splitlines()
    assert lines[0] == "time,r_1,r_2"
    assert [float(line.split(",")[0]) for line in lines[1:]] == [0.0, 0.05]


def test_cli_seed_override(tmp_path):
    run_cli(tmp_path, "sample-ensemble", SIM, "--out", str(tmp_path / "a"), "--seed", "99")
    run_cli(tmp_path, "sample-ensemble", dict(SIM, seed=99), "--out", str(tmp_path / "b"))
    assert (tmp_path / "a" / "spectra.csv").read_bytes() == (tmp_path / "b" / "spectra.csv").read_bytes()


def test_cli_zero_samples(tmp_path):
    assert run_cli(tmp_path, "simulate-mdbm", dict(SIM, n_samples=0), "--out", str(tmp_path / "o")) == 0
    assert not (tmp_path / "o" / "trajectories").exists()


def test_cli_exit_codes(tmp_path, capsys):
    assert run_cli(tmp_path, "simulate-mdbm", dict(SIM, beta=2)) == 2
    assert "requires beta >= 4" in capsys.readouterr().err
    assert main(["simulate-mdbm", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", "x"])
    assert exc.value.code == 2
    # guarded Euler at the critical beta hits its step-size floor
    doc = dict(SIM, n=20, dt=1e-2, horizon=2.0, n_samples=2, scheme="euler")
    assert run_cli(tmp_path, "simulate-mdbm", doc, "--out", str(tmp_path / "e")) == 3
    manifest = RunManifest.read(tmp_path / "e" / "manifest.json")
    assert manifest.failures and manifest.failures[0]["error"] == "NumericalError"


def test_verify_and_report(tmp_path, capsys):
    suite = {"seed": 42, "tests": ["integral_2pi", "adjoint_annihilation"]}
    assert run_cli(tmp_path, "verify", suite, "--out", str(tmp_path / "v")) == 0
    printed = capsys.readouterr().out
    assert "PASS [1] integral_2pi" in printed
    manifest = tmp_path / "v" / "manifest.json"
    assert main(["report", "--config", str(manifest)]) == 0
    (tmp_path / "v" / "summary.csv").write_text("tampered\n")
    assert main(["report", "--config", str(manifest)]) == 1
    assert "HASH MISMATCH summary.csv" in capsys.readouterr().err


def test_verify_failure_exit_code(tmp_path):
    suite = {"seed": 1, "tests": [{"name": "adjoint_annihilation", "params": {"tol": 0.0}}]}
    assert run_cli(tmp_path, "verify", suite, "--out", str(tmp_path / "v")) == 1


ROOT = __import__("pathlib").Path(__file__).resolve().parents[1]
COMMAND_FOR = {
    "acceptance.json": "verify",
    "gue_corners.json": "sample-corners",
    "goe_dense.json": "sample-ensemble",
    "mdbm_beta4.json": "simulate-mdbm",
    "limit_beta4.json": "simulate-limit",
}


@pytest.mark.parametrize("name", sorted(COMMAND_FOR))
def test_shipped_configs_parse(name):
    text = (ROOT / "configs" / name).read_text()
    parse_config_text(text, COMMAND_FOR[name], name)
    jsonschema = pytest.importorskip("jsonschema")
    jsonschema.validate(json.loads(text), json.loads((ROOT / "docs" / "config.schema.json").read_text()))
