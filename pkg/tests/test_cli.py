"""Command line interface tests."""

import json


from carenet.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main

GOOD = """
[scenario]
name = "cli-test"
seed = 3
duration = 30

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

[[devices]]
id = "sensor1"
kind = "ambient"
period = 10
gateway = "gw"
slice = "s"
"""


def write_config(tmp_path, text=GOOD):
    path = tmp_path / "scenario.toml"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_run_config_file_success(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", config, "--out", str(out)]) == EXIT_OK
    captured = capsys.readouterr()
    assert "emitted" in captured.out
    for name in ("events.jsonl", "audit.jsonl", "report.json"):
        assert (out / name).exists()


def test_run_builtin_scenario(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--scenario", "home", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["scenario"]["name"] == "home"


def test_seed_and_ticks_overrides_apply(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["run", "--scenario", "home", "--out", str(out), "--seed", "77", "--ticks", "120"]
    )
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["scenario"]["seed"] == 77
    assert report["scenario"]["duration"] == 120


def test_config_error_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, GOOD.replace('server = "core"', 'server = "nope"'))
    assert main(["run", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    captured = capsys.readouterr()
    assert "config error" in captured.err
    assert "network.server" in captured.err


def test_missing_config_file_exits_3(tmp_path, capsys):
    missing = str(tmp_path / "absent.toml")
    assert main(["run", missing, "--out", str(tmp_path / "out")]) == EXIT_IO
    assert "i/o error" in capsys.readouterr().err


def test_unwritable_output_exits_3(tmp_path, capsys):
    config = write_config(tmp_path)
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory", encoding="utf-8")
    assert main(["run", config, "--out", str(blocker)]) == EXIT_IO
    assert "i/o error" in capsys.readouterr().err


def test_config_and_scenario_together_rejected(tmp_path, capsys):
    config = write_config(tmp_path)
    code = main(["run", config, "--scenario", "home", "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "exactly one" in capsys.readouterr().err


def test_neither_config_nor_scenario_rejected(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_bad_seed_override_exits_2(tmp_path):
    assert (
        main(["run", "--scenario", "home", "--out", str(tmp_path / "o"), "--seed", "-1"])
        == EXIT_CONFIG
    )


def test_runs_are_reproducible_via_cli(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scenario", "road", "--out", str(out1)]) == EXIT_OK
    assert main(["run", "--scenario", "road", "--out", str(out2)]) == EXIT_OK
    for name in ("events.jsonl", "audit.jsonl", "report.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
