"""Scenario parsing, validation, and wiring tests."""

import pytest

from carenet.errors import ConfigError
from carenet.fixedpoint import fp
from carenet.scenario import (
    BUILTIN_SCENARIOS,
    build_runtime,
    builtin_scenario_text,
    parse_scenario,
    run_scenario,
    with_overrides,
)

MINIMAL = """
[scenario]
name = "tiny"
seed = 5
duration = 40

[network]
server = "core"
links = [["gw", "core"]]

[[nodes]]
id = "gw"
kind = "device-gateway"

[[nodes]]
id = "core"
kind = "core"

[[slices]]
id = "s"
members = ["gw", "core"]

[modalities.touch]
genuine = { mean = 0.8, stddev = 0.08 }
impostor = { mean = 0.3, stddev = 0.08 }

[[devices]]
id = "wear1"
kind = "wearable"
user = "u1"
modalities = ["touch"]
period = 10
gateway = "gw"
slice = "s"
"""


def test_minimal_scenario_parses_with_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.name == "tiny"
    assert sc.trust.threshold == fp(0.5)
    assert sc.trust.reward == fp(0.05)
    assert sc.trust.penalty == fp(0.1)
    assert sc.window == 10 and sc.cooldown == 50
    assert sc.policy.tiers[0][0] == fp(0.7)
    assert sc.devices[0].jitter == 0


def test_builtins_all_parse():
    for name in BUILTIN_SCENARIOS:
        sc = parse_scenario(builtin_scenario_text(name))
        assert sc.name == name
        assert sc.duration > 0


@pytest.mark.parametrize(
    "mutation,field",
    [
        (("seed = 5", "seed = -3"), "scenario.seed"),
        (("duration = 40", "duration = 0"), "scenario.duration"),
        (('server = "core"', 'server = "nope"'), "network.server"),
        (('links = [["gw", "core"]]', 'links = [["gw", "ghost"]]'), "network.links[0]"),
        (('members = ["gw", "core"]', 'members = ["gw", "core", "bad"]'),
         "slices[0].members"),
        (('gateway = "gw"', 'gateway = "core2"'), "devices[0].gateway"),
        (('modalities = ["touch"]', 'modalities = ["iris"]'), "devices[0].modalities"),
        (("period = 10", "period = 0"), "devices[0]"),
    ],
)
def test_bad_configs_name_the_field(mutation, field):
    old, new = mutation
    text = MINIMAL.replace(old, new)
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    assert excinfo.value.field == field


def test_missing_required_field():
    text = MINIMAL.replace('name = "tiny"\n', "")
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    assert excinfo.value.field == "scenario.name"


def test_toml_syntax_error_reports_position():
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario("[scenario\nname=3")
    assert "line" in str(excinfo.value)


def test_unknown_takeover_device_rejected():
    text = MINIMAL + '\n[[takeovers]]\ndevice = "ghost"\nstart = 5\n'
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    assert excinfo.value.field == "takeovers[0].device"


def test_takeover_needs_user_bound_device():
    text = MINIMAL + """
[[devices]]
id = "tag1"
kind = "ambient"
period = 5
gateway = "gw"
slice = "s"

[[takeovers]]
device = "tag1"
start = 5
"""
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    assert excinfo.value.field == "takeovers[0].device"


def test_handover_requires_public_gateway():
    text = MINIMAL + '\n[[handovers]]\ndevice = "wear1"\ntick = 10\nto = "public"\n'
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    assert excinfo.value.field == "handovers[0].device"


def test_compromise_multiplier_floor():
    text = MINIMAL + '\n[[compromises]]\ndevice = "wear1"\nstart = 5\nmultiplier = 1\n'
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_overrides_change_seed_and_duration():
    sc = parse_scenario(MINIMAL)
    sc2 = with_overrides(sc, seed=99, duration=80)
    assert sc2.seed == 99 and sc2.duration == 80
    assert sc2.devices[0].seed != sc.devices[0].seed  # reseeded
    assert with_overrides(sc) is sc


def test_override_duration_cannot_orphan_handover():
    text = builtin_scenario_text("road")
    sc = parse_scenario(text)
    with pytest.raises(ConfigError):
        with_overrides(sc, duration=100)  # handover at 200 left outside


def test_build_runtime_opens_sessions_for_user_devices():
    bundle = build_runtime(parse_scenario(MINIMAL))
    assert set(bundle.sessions) == {"wear1"}
    session = bundle.sessions["wear1"]
    assert session.user_id == "u1"
    assert session.trust.value == fp(1.0)
    assert bundle.simulator.monitored == ["gw"]
    assert bundle.header.scenario == "tiny"


def test_run_scenario_writes_artifacts(tmp_path):
    result = run_scenario(parse_scenario(MINIMAL), str(tmp_path / "out"))
    import os

    for path in (result.event_log, result.audit_log, result.report_file):
        assert os.path.exists(path)
    assert result.report["traffic"]["emitted"] == 4
    assert result.report["traffic"]["delivered"] == 4
    trace = next(iter(result.report["trust_traces"].values()))
    assert len(trace) == 4
