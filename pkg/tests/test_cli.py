from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from normplateau import __version__
from normplateau.cli import DEFAULT_TOLERANCES, main, run, scenario_hash, validate_scenario, InputError

SCENARIOS = Path(__file__).resolve().parents[1] / "examples" / "scenarios"
FAST = [
    "psi_linf3_hexagon",
    "section_l15_plane",
    "busemann_b_l1",
    "mass_tilted_triangle",
    "slice_integral_tilted",
    "flat_norm_square",
    "plateau_square_linf",
    "plateau_square_z2",
    "linf_graph_random",
    "lsc_synthetic",
    "support_reduce_pyramid",
    "zeta_planar_triangle",
]


def load(name: str) -> dict:
    return json.loads((SCENARIOS / f"{name}.json").read_text())


def write(tmp_path: Path, obj: dict) -> Path:
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(obj))
    return p


@pytest.mark.parametrize("name", FAST)
def test_golden_scenarios_succeed(name, tmp_path):
    assert run(SCENARIOS / f"{name}.json", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "ok"
    assert report["version"] == __version__
    assert report["scenarioHash"] == scenario_hash(load(name))
    for table in report["tables"]:
        assert (tmp_path / table).exists()


def test_every_golden_scenario_is_schema_valid():
    files = sorted(SCENARIOS.glob("*.json"))
    assert len(files) >= 15
    commands = set()
    for f in files:
        obj = json.loads(f.read_text())
        validate_scenario(obj)
        commands.add(obj["command"])
    assert len(commands) == 15


def test_psi_report_value(tmp_path):
    assert run(SCENARIOS / "psi_linf3_hexagon.json", tmp_path) == 0
    value = json.loads((tmp_path / "report.json").read_text())["result"]["value"]
    assert value == pytest.approx(0.604600, abs=1e-6)
    assert value == pytest.approx(math.pi / (3 * math.sqrt(3)), abs=1e-12)


def test_corrupted_contractor_exit_2(tmp_path):
    assert run(SCENARIOS / "contractor_verify_corrupted.json", tmp_path) == 2
    cert = json.loads((tmp_path / "report.json").read_text())["result"]["certificate"]
    assert not cert["passed"] and cert["maxViolation"] > 0.1 and cert["worstSubspace"]


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    scen = SCENARIOS / "contractor_build_bi.json"
    assert run(scen, a) == 0 and run(scen, b) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_no_temp_files_left(tmp_path):
    run(SCENARIOS / "busemann_b_l1.json", tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["busemann_b.csv", "report.json"]


def test_seed_override_recorded(tmp_path):
    assert main(["--scenario", str(SCENARIOS / "linf_graph_random.json"), "--out", str(tmp_path), "--seed", "11"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["seed"] == 11
    assert report["scenarioHash"] == scenario_hash({**load("linf_graph_random"), "seed": 11})


def test_tolerances_defaults_and_override(tmp_path):
    obj = load("psi_linf3_hexagon")
    obj["tolerances"] = {"float": 1e-9}
    run(write(tmp_path, obj), tmp_path / "out")
    tol = json.loads((tmp_path / "out" / "report.json").read_text())["tolerances"]
    assert tol == {**DEFAULT_TOLERANCES, "float": 1e-9}


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda s: s["inputs"]["subspace"].update(normal="x"), "/inputs/subspace/normal"),
        (lambda s: s.update(command="nope"), "/command"),
        (lambda s: s["norm"].update(p=0.5), "/norm"),
        (lambda s: s.pop("inputs"), "required"),
    ],
)
def test_schema_errors_cite_path(mutate, fragment, tmp_path, capsys):
    obj = load("psi_linf3_hexagon")
    mutate(obj)
    assert run(write(tmp_path, obj), tmp_path / "out") == 1
    assert fragment in capsys.readouterr().err
    assert not (tmp_path / "out" / "report.json").exists()


def test_seed_required_for_sampled_commands(tmp_path, capsys):
    obj = load("contractor_build_bi")
    del obj["seed"]
    assert run(write(tmp_path, obj), tmp_path / "out") == 1
    assert "seed" in capsys.readouterr().err


def test_dimension_mismatch_is_input_error(tmp_path, capsys):
    obj = load("psi_linf3_hexagon")
    obj["inputs"]["subspace"] = {"normal": [1, 1]}
    assert run(write(tmp_path, obj), tmp_path / "out") == 1
    assert "/inputs/subspace/normal" in capsys.readouterr().err


def test_unreadable_scenario(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(bad, tmp_path / "out") == 1
