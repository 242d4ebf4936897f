"""Scenario file format: strict parsing, round-trip identity, overrides."""

from pathlib import Path

import pytest
import yaml

from cablesim.actuator import ActuatorConfig
from cablesim.control import Amplify, Hold, Teleop, Trajectory
from cablesim.errors import ScenarioFormatError
from cablesim.presets import PRESETS
from cablesim.scenario_io import (
    apply_override,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

MINIMAL = """
duration: 1.0
payload: {mass: 10.0, inertia_yy: 0.5}
initial_pose: {x: 2.0, z: 1.0}
modules:
- anchor: [0.0, 2.5]
- anchor: [4.0, 2.5]
mode: {type: hold}
"""


def test_minimal_scenario_parses_with_defaults():
    sc = loads_scenario(MINIMAL)
    assert sc.payload.mass == 10.0
    assert sc.modules[0].t_min == 30.0
    assert sc.mode == Hold(None)
    assert sc.rates.inner_hz == 1000
    assert sc.actuator == ActuatorConfig()
    assert sc.noise.sigma_pos == 0.0
    assert sc.seed == 0


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip_exactly(name):
    scenario = PRESETS[name]()
    text = dumps_scenario(scenario)
    reparsed = loads_scenario(text, name)
    assert reparsed == scenario
    assert dumps_scenario(reparsed) == text


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_repository_scenario_files_match_presets(name):
    path = SCENARIO_DIR / f"{name}.scenario"
    assert path.exists(), f"missing example scenario file {path}"
    assert load_scenario(path) == PRESETS[name]()


def test_save_and_load_round_trip(tmp_path):
    scenario = PRESETS["square_4mod"]()
    path = tmp_path / "case.scenario"
    save_scenario(scenario, path)
    assert load_scenario(path) == scenario


# --- strictness -------------------------------------------------------------


def test_unknown_top_level_key_is_rejected():
    with pytest.raises(ScenarioFormatError, match="unknown keys.*gravity_dir"):
        loads_scenario(MINIMAL + "gravity_dir: down\n")


def test_unknown_nested_key_is_rejected():
    bad = MINIMAL.replace("payload: {mass: 10.0, inertia_yy: 0.5}",
                          "payload: {mass: 10.0, inertia_yy: 0.5, color: red}")
    with pytest.raises(ScenarioFormatError, match="payload.*color"):
        loads_scenario(bad)


def test_missing_required_key_is_rejected():
    bad = "\n".join(line for line in MINIMAL.splitlines()
                    if not line.startswith("duration"))
    with pytest.raises(ScenarioFormatError, match="missing required.*duration"):
        loads_scenario(bad)


def test_wrong_type_is_rejected():
    with pytest.raises(ScenarioFormatError, match="expected a number"):
        loads_scenario(MINIMAL.replace("duration: 1.0", "duration: short"))
    with pytest.raises(ScenarioFormatError, match="expected an integer"):
        loads_scenario(MINIMAL + "seed: 1.5\n")
    with pytest.raises(ScenarioFormatError, match="expected a number"):
        loads_scenario(MINIMAL.replace("mass: 10.0", "mass: true"))


def test_unknown_mode_is_rejected():
    with pytest.raises(ScenarioFormatError, match="unknown mode"):
        loads_scenario(MINIMAL.replace("{type: hold}", "{type: drift}"))


def test_mode_specific_keys_are_enforced():
    with pytest.raises(ScenarioFormatError, match="unknown keys"):
        loads_scenario(MINIMAL.replace("{type: hold}",
                                       "{type: hold, gain: 2.0}"))


def test_semantic_errors_surface_as_format_errors():
    bad = MINIMAL.replace("mass: 10.0", "mass: -1.0")
    with pytest.raises(ScenarioFormatError):
        loads_scenario(bad)
    bad = MINIMAL + "rates: {inner_hz: 100, qp_hz: 500, pose_hz: 200}\n"
    with pytest.raises(ScenarioFormatError):
        loads_scenario(bad)


def test_invalid_yaml_and_empty_document():
    with pytest.raises(ScenarioFormatError, match="invalid YAML"):
        loads_scenario("mode: [unclosed")
    with pytest.raises(ScenarioFormatError, match="empty"):
        loads_scenario("")
    with pytest.raises(ScenarioFormatError, match="expected a mapping"):
        loads_scenario("- just\n- a\n- list\n")


def test_ideal_actuator_flag_excludes_other_parameters():
    good = MINIMAL + "actuator: {ideal: true, t_max: 250.0}\n"
    sc = loads_scenario(good)
    assert sc.actuator == ActuatorConfig.ideal(t_max=250.0)
    bad = MINIMAL + "actuator: {ideal: true, kp: 2.0}\n"
    with pytest.raises(ScenarioFormatError, match="ideal actuators"):
        loads_scenario(bad)


def test_ideal_actuator_serializes_back_to_flag():
    sc = loads_scenario(MINIMAL + "actuator: {ideal: true}\n")
    data = scenario_to_dict(sc)
    assert data["actuator"] == {"ideal": True, "t_max": 300.0}


# --- mode coverage ----------------------------------------------------------


def test_all_modes_round_trip():
    for mode_yaml, expected in [
        ("{type: hold, target: {x: 1.0, z: 2.0}}", Hold),
        ("{type: teleop, initial_command: {fx: 5.0}}", Teleop),
        ("{type: amplify, gain: 1.5}", Amplify),
    ]:
        text = MINIMAL.replace("{type: hold}", mode_yaml)
        sc = loads_scenario(text)
        assert isinstance(sc.mode, expected)
        assert loads_scenario(dumps_scenario(sc)) == sc
    traj = MINIMAL.replace(
        "mode: {type: hold}",
        "mode:\n  type: trajectory\n  waypoints:\n"
        "  - {t: 0.0, pose: {x: 2.0, z: 1.0}}\n"
        "  - {t: 1.0, pose: {x: 2.1, z: 1.0}}")
    sc = loads_scenario(traj)
    assert isinstance(sc.mode, Trajectory)
    assert loads_scenario(dumps_scenario(sc)) == sc


def test_profiles_and_operator_round_trip():
    text = MINIMAL + (
        "wrench_profile:\n"
        "- {t: 0.5, wrench: {fx: 10.0, fz: -2.0}}\n"
        "operator:\n"
        "  stiffness: 300.0\n"
        "  waypoints:\n"
        "  - {t: 0.0, pose: {x: 2.0, z: 1.0}}\n"
        "  - {t: 5.0, pose: {x: 2.5, z: 1.0}}\n")
    sc = loads_scenario(text)
    assert sc.wrench_profile[0][1].fx == 10.0
    assert sc.operator.stiffness == 300.0
    assert sc.operator.damping == 80.0  # default filled in
    assert loads_scenario(dumps_scenario(sc)) == sc


# --- overrides --------------------------------------------------------------


def test_override_scalar_and_nested_keys():
    data = yaml.safe_load(MINIMAL)
    apply_override(data, "duration", "2.5")
    apply_override(data, "payload.mass", "12.0")
    apply_override(data, "modules.1.t_max", "250.0")
    sc = scenario_from_dict(data)
    assert sc.duration == 2.5
    assert sc.payload.mass == 12.0
    assert sc.modules[1].t_max == 250.0
    assert sc.modules[0].t_max == 300.0


def test_override_materializes_optional_sections():
    data = yaml.safe_load(MINIMAL)
    apply_override(data, "noise.sigma_pos", "0.001")
    sc = scenario_from_dict(data)
    assert sc.noise.sigma_pos == 0.001


def test_override_bad_paths_raise():
    data = yaml.safe_load(MINIMAL)
    with pytest.raises(ScenarioFormatError, match="no such key"):
        apply_override(data, "payload.massive.value", "1")
    with pytest.raises(ScenarioFormatError, match="no list entry"):
        apply_override(data, "modules.7.t_max", "100")
    # Misspelled leaf keys are caught by the strict parse afterwards.
    apply_override(data, "durationn", "5")
    with pytest.raises(ScenarioFormatError, match="unknown keys"):
        scenario_from_dict(data)
