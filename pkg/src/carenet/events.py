"""Simulation event records and the serialized event log.

The event log is line-delimited JSON.  The first line is a run header
describing the scenario, topology, and injected schedules; every later
line is one simulation event.  Everything needed to recompute metrics
lives in these two shapes, so reports never depend on in-memory state.

Events are totally ordered by (tick, seq); seq is assigned at append
time and is contiguous from 0 within a run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import CorruptLine


class EventKind(str, Enum):
    EMIT = "emit"
    DELIVER = "deliver"
    DROP = "drop"
    ANOMALY_FLAGGED = "anomaly-flagged"
    ISOLATE = "isolate"
    REINTEGRATE = "reintegrate"
    HANDOVER = "handover"
    REROUTE = "reroute"


@dataclass(frozen=True)
class SimEvent:
    tick: int
    seq: int
    kind: EventKind
    data: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise ValueError("tick must be non-negative")
        if self.seq < 0:
            raise ValueError("seq must be non-negative")


@dataclass(frozen=True)
class RunHeader:
    """First line of an event log: enough context to replay the metrics."""

    scenario: str
    seed: int
    duration: int
    window: int
    cooldown: int
    nodes: tuple[tuple[str, str], ...] = ()
    slices: tuple[tuple[str, tuple[str, ...]], ...] = ()
    sessions: tuple[tuple[str, str, str], ...] = ()  # (session_id, user, device)
    compromises: tuple[dict[str, Any], ...] = ()
    handovers: tuple[dict[str, Any], ...] = ()
    takeovers: tuple[dict[str, Any], ...] = ()


def event_to_line(event: SimEvent) -> str:
    payload: dict[str, Any] = {
        "tick": event.tick,
        "seq": event.seq,
        "kind": event.kind.value,
    }
    payload.update(event.data)
    return json.dumps(payload, separators=(",", ":"))


def event_from_line(line: str, line_no: int = 1) -> SimEvent:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLine(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise CorruptLine(line_no, "event is not an object")
    for fieldname in ("tick", "seq", "kind"):
        if fieldname not in payload:
            raise CorruptLine(line_no, f"missing field {fieldname!r}")
    try:
        kind = EventKind(payload["kind"])
        tick = payload["tick"]
        seq = payload["seq"]
        data = {k: v for k, v in payload.items() if k not in ("tick", "seq", "kind")}
        return SimEvent(tick=tick, seq=seq, kind=kind, data=data)
    except (ValueError, TypeError) as exc:
        raise CorruptLine(line_no, str(exc)) from exc


def header_to_line(header: RunHeader) -> str:
    payload = {
        "record": "run-header",
        "scenario": header.scenario,
        "seed": header.seed,
        "duration": header.duration,
        "window": header.window,
        "cooldown": header.cooldown,
        "nodes": [[node_id, kind] for node_id, kind in header.nodes],
        "slices": [[sid, list(members)] for sid, members in header.slices],
        "sessions": [list(entry) for entry in header.sessions],
        "compromises": list(header.compromises),
        "handovers": list(header.handovers),
        "takeovers": list(header.takeovers),
    }
    return json.dumps(payload, separators=(",", ":"))


def header_from_line(line: str, line_no: int = 1) -> RunHeader:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLine(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict) or payload.get("record") != "run-header":
        raise CorruptLine(line_no, "first line is not a run header")
    try:
        return RunHeader(
            scenario=payload["scenario"],
            seed=payload["seed"],
            duration=payload["duration"],
            window=payload["window"],
            cooldown=payload["cooldown"],
            nodes=tuple((n, k) for n, k in payload.get("nodes", [])),
            slices=tuple(
                (sid, tuple(members)) for sid, members in payload.get("slices", [])
            ),
            sessions=tuple(tuple(entry) for entry in payload.get("sessions", [])),
            compromises=tuple(payload.get("compromises", [])),
            handovers=tuple(payload.get("handovers", [])),
            takeovers=tuple(payload.get("takeovers", [])),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptLine(line_no, f"malformed run header: {exc}") from exc


def write_event_log(path: str, header: RunHeader, events: Iterable[SimEvent]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_to_line(header))
        fh.write("\n")
        for event in events:
            fh.write(event_to_line(event))
            fh.write("\n")


def read_event_log(path: str) -> tuple[RunHeader, list[SimEvent]]:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        first = fh.readline()
        if first == "":
            raise CorruptLine(1, "empty event log")
        header = header_from_line(first.rstrip("\n"), 1)
        events = []
        for line_no, line in enumerate(fh, start=2):
            stripped = line.rstrip("\n")
            if stripped == "":
                raise CorruptLine(line_no, "blank line in log")
            events.append(event_from_line(stripped, line_no))
    return header, events
