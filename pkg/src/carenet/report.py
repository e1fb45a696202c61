"""Run metrics, recomputable from the persisted logs alone.

Everything in the report derives from the event log (with its run
header) and the audit log.  Nothing is read from live objects, so a
report can be regenerated long after a run from its artifacts and must
come out identical.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Sequence

from .audit import AuditEventKind, AuditRecord, load_audit
from .biometrics import compute_eer
from .errors import EmptyPopulation
from .events import EventKind, RunHeader, SimEvent, read_event_log
from .fixedpoint import mean_half_up


def build_report(
    header: RunHeader,
    events: Sequence[SimEvent],
    audit_records: Iterable[AuditRecord],
) -> dict[str, Any]:
    records = list(audit_records)
    session_of_device = {device: sid for sid, _user, device in header.sessions}

    report: dict[str, Any] = {
        "scenario": {
            "name": header.scenario,
            "seed": header.seed,
            "duration": header.duration,
            "window": header.window,
            "cooldown": header.cooldown,
        },
        "traffic": _traffic(events),
        "trust_traces": _trust_traces(records),
        "eer": _eer_section(events),
        "detections": _detections(header, events),
        "handovers": _handovers(header, events, records, session_of_device),
        "sessions": _session_outcomes(header, records),
        "audit_reconciliation": _reconcile(records),
    }
    return report


def _traffic(events: Sequence[SimEvent]) -> dict[str, Any]:
    emitted = 0
    delivered = 0
    rerouted = 0
    dropped: dict[str, int] = {}
    for ev in events:
        if ev.kind is EventKind.EMIT:
            emitted += 1
        elif ev.kind is EventKind.DELIVER:
            delivered += 1
        elif ev.kind is EventKind.REROUTE:
            rerouted += 1
        elif ev.kind is EventKind.DROP:
            reason = ev.data.get("reason", "unknown")
            dropped[reason] = dropped.get(reason, 0) + 1
    return {
        "emitted": emitted,
        "delivered": delivered,
        "dropped": dict(sorted(dropped.items())),
        "dropped_total": sum(dropped.values()),
        "rerouted": rerouted,
    }


def _trust_traces(records: Sequence[AuditRecord]) -> dict[str, list[list[Any]]]:
    traces: dict[str, list[list[Any]]] = {}
    for rec in records:
        if rec.event_kind is AuditEventKind.DECISION_ISSUED:
            tier = rec.tier.value if rec.tier is not None else None
            traces.setdefault(rec.session_id, []).append(
                [rec.tick, rec.trust_after, tier]
            )
    return dict(sorted(traces.items()))


def _eer_section(events: Sequence[SimEvent]) -> dict[str, Any]:
    per_modality: dict[str, dict[str, list[int]]] = {}
    fused: dict[str, list[int]] = {"genuine": [], "impostor": []}
    for ev in events:
        if ev.kind is not EventKind.EMIT:
            continue
        scores = ev.data.get("scores")
        source = ev.data.get("source")
        if not scores or source not in ("genuine", "impostor"):
            continue
        for modality, value in scores.items():
            per_modality.setdefault(modality, {"genuine": [], "impostor": []})
            per_modality[modality][source].append(value)
        fused[source].append(mean_half_up(list(scores.values())))

    out: dict[str, Any] = {"per_modality": {}, "fused": None}
    for modality in sorted(per_modality):
        pops = per_modality[modality]
        out["per_modality"][modality] = _eer_entry(pops["genuine"], pops["impostor"])
    out["fused"] = _eer_entry(fused["genuine"], fused["impostor"])
    return out


def _eer_entry(genuine: list[int], impostor: list[int]) -> dict[str, Any] | None:
    if not genuine or not impostor:
        return None
    try:
        eer, threshold = compute_eer(genuine, impostor)
    except EmptyPopulation:  # pragma: no cover - guarded above
        return None
    return {
        "eer": eer,
        "threshold": threshold,
        "genuine": len(genuine),
        "impostor": len(impostor),
    }


def _detections(header: RunHeader, events: Sequence[SimEvent]) -> list[dict[str, Any]]:
    out = []
    for comp in header.compromises:
        node = comp["node"]
        start = comp["start"]
        isolate_tick = None
        reintegrate_tick = None
        windows_flagged = 0
        for ev in events:
            if ev.data.get("node") != node:
                continue
            if ev.kind is EventKind.ANOMALY_FLAGGED and ev.tick >= start:
                if isolate_tick is None:
                    windows_flagged += 1
            elif ev.kind is EventKind.ISOLATE and ev.tick >= start and isolate_tick is None:
                isolate_tick = ev.tick
            elif ev.kind is EventKind.REINTEGRATE and isolate_tick is not None:
                if reintegrate_tick is None:
                    reintegrate_tick = ev.tick
        out.append(
            {
                "device": comp["device"],
                "node": node,
                "start": start,
                "resolve": comp.get("resolve"),
                "isolate_tick": isolate_tick,
                "latency": None if isolate_tick is None else isolate_tick - start,
                "windows_flagged": windows_flagged,
                "reintegrate_tick": reintegrate_tick,
            }
        )
    return out


def _handovers(
    header: RunHeader,
    events: Sequence[SimEvent],
    records: Sequence[AuditRecord],
    session_of_device: Mapping[str, str],
) -> list[dict[str, Any]]:
    out = []
    for ev in events:
        if ev.kind is not EventKind.HANDOVER:
            continue
        device = ev.data.get("device")
        session_id = session_of_device.get(device)
        reauth_tick = None
        if session_id is not None:
            for rec in records:
                if (
                    rec.session_id == session_id
                    and rec.event_kind is AuditEventKind.DECISION_ISSUED
                    and rec.tick > ev.tick
                ):
                    reauth_tick = rec.tick
                    break
        out.append(
            {
                "device": device,
                "tick": ev.tick,
                "from": ev.data.get("from"),
                "to": ev.data.get("to"),
                "buffered": ev.data.get("buffered"),
                "dropped": ev.data.get("dropped"),
                "reauth_tick": reauth_tick,
            }
        )
    return out


def _session_outcomes(
    header: RunHeader, records: Sequence[AuditRecord]
) -> dict[str, Any]:
    meta = {sid: {"user": user, "device": device} for sid, user, device in header.sessions}
    out: dict[str, Any] = {}
    for sid in sorted(meta):
        accepted = 0
        locked_at = None
        final_trust = None
        final_tier = None
        for rec in records:
            if rec.session_id != sid:
                continue
            if rec.event_kind is AuditEventKind.SAMPLE_ACCEPTED:
                accepted += 1
            elif rec.event_kind is AuditEventKind.DECISION_ISSUED:
                final_trust = rec.trust_after
                final_tier = rec.tier.value if rec.tier else None
            elif rec.event_kind is AuditEventKind.SESSION_LOCKED and locked_at is None:
                locked_at = rec.tick
        out[sid] = {
            "user": meta[sid]["user"],
            "device": meta[sid]["device"],
            "samples_accepted": accepted,
            "final_trust": final_trust,
            "final_tier": final_tier,
            "locked_at": locked_at,
        }
    return out


def _reconcile(records: Sequence[AuditRecord]) -> dict[str, Any]:
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec.event_kind.value] = counts.get(rec.event_kind.value, 0) + 1
    accepted = counts.get(AuditEventKind.SAMPLE_ACCEPTED.value, 0)
    updated = counts.get(AuditEventKind.TRUST_UPDATED.value, 0)
    decided = counts.get(AuditEventKind.DECISION_ISSUED.value, 0)
    return {
        "counts": dict(sorted(counts.items())),
        "pipeline_consistent": accepted == updated == decided,
    }


def write_report(report: Mapping[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=False)
        fh.write("\n")


def report_from_logs(event_log_path: str, audit_log_path: str) -> dict[str, Any]:
    """Rebuild the metrics report from persisted artifacts."""
    header, events = read_event_log(event_log_path)
    audit = load_audit(audit_log_path)
    return build_report(header, events, audit.records())
