"""CLI contract: validation messages name keys, runs write stable artifacts."""

import copy
import json
import subprocess
import sys

import pytest

from dwdm80.cli import TEMPLATES, ValidationError, main, validate_scenario
from dwdm80.scenarios import RESULT_COLUMNS


def _spec(**over):
    spec = {
        "schema_version": 1, "id": "tiny", "kind": "b2b-osnr", "seed": 1,
        "params": {"format": "analytic", "osnr_db": [10.0, 20.0],
                   "compute_required_osnr": False},
    }
    spec.update(over)
    return spec


def _expect(spec, fragment):
    with pytest.raises(ValidationError, match=fragment):
        validate_scenario(spec)


def test_validate_names_offending_keys():
    _expect([], "JSON object")
    _expect(_spec(bogus=1), "unknown key 'bogus'")
    s = _spec()
    del s["id"]
    _expect(s, "missing required key 'id'")
    _expect(_spec(schema_version=2), "'schema_version'")
    _expect(_spec(id="bad id!"), "'id'")
    _expect(_spec(kind="nope"), "'kind'")
    _expect(_spec(seed="x"), "'seed'")
    _expect(_spec(params=[1]), "'params'")


def test_validate_names_offending_params():
    _expect(
        _spec(params={"format": "analytic", "osnr_db": [10.0], "bogus": 1}),
        "unknown key 'params.bogus' for kind 'b2b-osnr'",
    )
    _expect(_spec(params={"format": "analytic"}), "missing required key 'params.osnr_db'")
    reach = {
        "schema_version": 1, "id": "r", "kind": "reach-sweep",
        "params": {"format": "pam4", "distances_km": [0.0, -3.0], "osnr_db": 32.0},
    }
    _expect(reach, "'params.distances_km'")
    _expect(
        _spec(params={"format": "analytic", "osnr_db": "10"}),
        "'params.osnr_db'",
    )
    _expect(
        _spec(params={"format": "dvb", "osnr_db": [10.0]}),
        "'params.format'",
    )


def test_builtin_templates_validate():
    for name, spec in TEMPLATES.items():
        validate_scenario(spec)
        assert spec["id"] == name


def test_list_prints_every_template(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in TEMPLATES:
        assert name in out


def test_template_round_trips_as_json(capsys):
    assert main(["template", "pam4-reach"]) == 0
    assert json.loads(capsys.readouterr().out) == TEMPLATES["pam4-reach"]
    assert main(["template", "nope"]) == 2
    assert "unknown template" in capsys.readouterr().err


def test_validate_command(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_spec()))
    assert main(["validate", str(good)]) == 0
    assert "valid" in capsys.readouterr().out

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_spec(kind="nope")))
    assert main(["validate", str(bad)]) == 2
    assert "'kind'" in capsys.readouterr().err

    notjson = tmp_path / "notjson.json"
    notjson.write_text("{")
    assert main(["validate", str(notjson)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_run_usage_errors(tmp_path, capsys):
    assert main(["run"]) == 2
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(_spec()))
    assert main(["run", str(scen), "--template", "pam4-reach"]) == 2
    assert main(["run", "--template", "nope"]) == 2
    capsys.readouterr()


def test_run_writes_results_and_manifest(tmp_path, capsys):
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(_spec()))
    out = tmp_path / "out"
    assert main(["run", str(scen), "--out", str(out)]) == 0
    capsys.readouterr()

    csv_path = out / "tiny" / "results.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + 8  # four analytic series, two points each
    assert all(",4.0e-03," in ln and ",1.9e-02," in ln for ln in lines[1:])

    manifest = json.loads((out / "tiny" / "manifest.json").read_text())
    assert manifest["scenario_id"] == "tiny"
    assert manifest["rows"] == 8
    assert manifest["thresholds"] == {"hd": "4.0e-03", "sd": "1.9e-02"}
    assert manifest["scenario"] == _spec()

    first = csv_path.read_bytes()
    assert main(["run", str(scen), "--out", str(out)]) == 0
    capsys.readouterr()
    assert csv_path.read_bytes() == first


def test_run_rejects_invalid_scenario_before_work(tmp_path, capsys):
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(_spec(schema_version=3)))
    assert main(["run", str(scen)]) == 2
    assert "invalid scenario" in capsys.readouterr().err


def test_runtime_failure_exits_one(tmp_path, capsys):
    spec = _spec(params={
        "format": "pam4", "osnr_db": [-20.0],
        "batch_bits": 4000, "max_bits": 4000,
    })
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(spec))
    assert main(["run", str(scen), "--out", str(tmp_path / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_template_specs_are_not_mutated_by_a_run(tmp_path, capsys):
    before = copy.deepcopy(TEMPLATES["b2b-osnr-analytic"])
    assert main(["run", "--template", "b2b-osnr-analytic",
                 "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert TEMPLATES["b2b-osnr-analytic"] == before


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dwdm80.cli", "list"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "vsb-wdm-400g" in proc.stdout
