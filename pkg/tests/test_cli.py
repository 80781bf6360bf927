import json

import numpy as np
import pytest

from rydcluster.cli import EXIT_DOMAIN, EXIT_OK, EXIT_PARAMETER, EXIT_USAGE, main

FAST_ARGS = {
    "bands": ["--q-points", "9"],
    "wannier": ["--q-points", "9"],
    "ramp": ["--scale", "0.05"],
    "stretch": ["--duration", "2.0"],
    "gate-noblockade": [],
    "gate-blockade": [],
    "error-budget": [],
    "timing": [],
    "cluster": ["--geometry", "1d:4"],
}


@pytest.fixture(autouse=True)
def no_env_output(monkeypatch):
    monkeypatch.delenv("RYDCLUSTER_OUTPUT_DIR", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("command", sorted(FAST_ARGS))
def test_every_command_writes_json_to_stdout(capsys, command):
    code, out, err = run(capsys, command, *FAST_ARGS[command], "--reproducible")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["meta"]["command"] == command
    assert "created" not in doc["meta"]
    assert doc["payload"]
    assert err.strip()


def test_timestamp_present_by_default(capsys):
    code, out, _ = run(capsys, "timing")
    assert code == EXIT_OK
    assert "created" in json.loads(out)["meta"]


@pytest.mark.parametrize("argv", [
    ["bands", "--V0", "-1"],
    ["bands", "--V0", "nan"],
    ["cluster", "--format", "csv"],
    ["cluster", "--geometry", "2d:4x5"],
    ["gate-blockade", "--Delta-vec-kHz", "0"],
])
def test_parameter_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_PARAMETER
    assert "parameter error" in err


def test_domain_error_exits_3(capsys):
    code, _, err = run(capsys, "stretch", "--k-end", "1e-300", "--duration", "1e-300")
    assert code == EXIT_DOMAIN
    assert "domain error" in err


@pytest.mark.parametrize("argv", [
    ["bands", "--no-such-flag"],
    ["no-such-command"],
    ["bands", "--coupling", "sideways"],
    ["timing", "--dimension", "3"],
])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_USAGE


@pytest.mark.parametrize("content", [
    {"lattice": {"depth": 3}},
    {"pulse": {"Omega_eff": 1.0}},
    "not json",
    [1, 2],
])
def test_bad_config_is_usage_error(capsys, tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content if isinstance(content, str) else json.dumps(content))
    code, _, _ = run(capsys, "bands", "--config", str(path))
    assert code == EXIT_USAGE


def test_bad_config_value_is_parameter_error(capsys, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"lattice": {"n_max": "ten"}}))
    assert run(capsys, "bands", "--config", str(path))[0] == EXIT_PARAMETER
    path.write_text(json.dumps({"lattice": {"coupling": "sideways"}}))
    assert run(capsys, "bands", "--config", str(path))[0] == EXIT_PARAMETER


def test_missing_config_is_usage_error(capsys, tmp_path):
    assert run(capsys, "bands", "--config", str(tmp_path / "absent.json"))[0] == EXIT_USAGE


def test_reproducible_output_is_byte_identical(capsys, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for target in (first, second):
        assert run(capsys, "gate-noblockade", "--reproducible", "--output", str(target))[0] == EXIT_OK
    assert (first / "gate-noblockade.json").read_bytes() == (second / "gate-noblockade.json").read_bytes()


def test_save_config_round_trip(capsys, tmp_path):
    saved = tmp_path / "saved.json"
    code, _, _ = run(capsys, "bands", "--V0", "40", "--V1", "60", "--q-points", "9", "--save-config", str(saved))
    assert code == EXIT_OK
    config = json.loads(saved.read_text())
    assert config["command"] == "bands"
    assert config["lattice"]["V0"] == 40.0

    _, from_file, _ = run(capsys, "bands", "--config", str(saved), "--reproducible")
    _, from_flags, _ = run(capsys, "bands", "--V0", "40", "--V1", "60", "--q-points", "9", "--reproducible")
    assert from_file == from_flags


def test_flags_override_config(capsys, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"lattice": {"V0": 40.0, "q_points": 9}}))
    _, out, _ = run(capsys, "bands", "--config", str(path), "--V0", "20")
    config = json.loads(out)["meta"]["config"]
    assert config["lattice"]["V0"] == 20.0
    assert config["lattice"]["q_points"] == 9


def test_output_directory_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RYDCLUSTER_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "timing")
    assert code == EXIT_OK
    assert "us" in out
    assert json.loads((tmp_path / "timing.json").read_text())["meta"]["command"] == "timing"
    assert (tmp_path / "timing.csv").exists()


def test_output_file_suffix_follows_format(capsys, tmp_path):
    target = tmp_path / "result.txt"
    assert run(capsys, "bands", "--q-points", "9", "--format", "csv", "--output", str(target))[0] == EXIT_OK
    assert (tmp_path / "result.csv").exists()
    assert (tmp_path / "result.json").exists()


def test_csv_matches_json(capsys, tmp_path):
    run(capsys, "bands", "--q-points", "9", "--output", str(tmp_path))
    payload = json.loads((tmp_path / "bands.json").read_text())["payload"]
    lines = (tmp_path / "bands.csv").read_text().splitlines()
    assert lines[0].split(",")[:2] == ["q", "E1"]
    table = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.array_equal(table[:, 0], np.array(payload["q"]))
    assert np.array_equal(table[:, 1:].T, np.array(payload["energies"]))


def test_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "timing", "--format", "csv")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "scheme_index,dimension,total_us"
    assert len(out.splitlines()) == 5


@pytest.mark.parametrize("command", ["gate-noblockade", "gate-blockade", "error-budget"])
def test_verify_table(capsys, command):
    code, out, err = run(capsys, command, "--verify")
    assert code == EXIT_OK
    assert json.loads(out)["payload"]["verify"]
    assert "numeric" in err or "computed" in err


def test_ramp_scan_and_jobs(capsys):
    code, out, _ = run(capsys, "ramp", "--scale", "0.05", "--scales", "1,2", "--jobs", "2")
    assert code == EXIT_OK
    assert np.array(json.loads(out)["payload"]["scan"]).shape == (2, 2)
