"""Report recomputability and content tests."""

import json

from carenet.audit import load_audit
from carenet.events import read_event_log
from carenet.report import build_report, report_from_logs
from carenet.scenario import builtin_scenario_text, parse_scenario, run_scenario


def road_run(tmp_path):
    scenario = parse_scenario(builtin_scenario_text("road"))
    return run_scenario(scenario, str(tmp_path / "road"))


def test_report_recomputable_from_logs_alone(tmp_path):
    result = road_run(tmp_path)
    recomputed = report_from_logs(result.event_log, result.audit_log)
    on_disk = json.load(open(result.report_file, encoding="utf-8"))
    assert recomputed == on_disk


def test_report_is_pure_function_of_logs(tmp_path):
    result = road_run(tmp_path)
    header, events = read_event_log(result.event_log)
    audit = load_audit(result.audit_log)
    first = build_report(header, events, audit.records())
    second = build_report(header, events, audit.records())
    assert first == second


def test_detection_section_ties_isolation_to_compromise(tmp_path):
    report = road_run(tmp_path).report
    (detection,) = report["detections"]
    assert detection["node"] == "beacon_gw"
    assert detection["start"] == 50
    assert detection["isolate_tick"] == 80
    assert detection["latency"] == 30
    assert detection["windows_flagged"] == 3
    assert detection["reintegrate_tick"] == 170


def test_handover_section_contains_reauthentication(tmp_path):
    report = road_run(tmp_path).report
    (handover,) = report["handovers"]
    assert handover["device"] == "medband1"
    assert handover["tick"] == 200
    assert handover["reauth_tick"] is not None
    assert handover["reauth_tick"] > 200


def test_trust_trace_matches_audit_decisions(tmp_path):
    result = road_run(tmp_path)
    audit = load_audit(result.audit_log)
    for session_id, trace in result.report["trust_traces"].items():
        decisions = [
            r for r in audit.records()
            if r.session_id == session_id and r.event_kind.value == "decision-issued"
        ]
        assert [[r.tick, r.trust_after, r.tier.value] for r in decisions] == trace


def test_hospital_eer_separates_populations(tmp_path):
    scenario = parse_scenario(builtin_scenario_text("hospital"))
    report = run_scenario(scenario, str(tmp_path / "hosp")).report
    eer = report["eer"]
    assert set(eer["per_modality"]) == {"touch", "keystroke"}
    for entry in eer["per_modality"].values():
        assert entry["genuine"] > 0 and entry["impostor"] > 0
        assert 0.0 <= entry["eer"] <= 0.25
    assert eer["fused"]["eer"] <= min(e["eer"] for e in eer["per_modality"].values()) + 0.05


def test_home_run_has_no_incidents(tmp_path):
    scenario = parse_scenario(builtin_scenario_text("home"))
    report = run_scenario(scenario, str(tmp_path / "home")).report
    assert report["detections"] == []
    assert report["handovers"] == []
    assert report["traffic"]["dropped_total"] == 0
    assert report["eer"]["fused"] is None  # no impostor population
    assert report["audit_reconciliation"]["pipeline_consistent"]


def test_audit_reconciliation_counts(tmp_path):
    result = road_run(tmp_path)
    counts = result.report["audit_reconciliation"]["counts"]
    assert counts["sample-accepted"] == counts["trust-updated"] == counts["decision-issued"]
    assert counts["session-opened"] >= 1
    assert result.report["audit_reconciliation"]["pipeline_consistent"]
