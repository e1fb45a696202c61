"""Append-only audit log for the authentication server.

Records are immutable, appended under a lock, and persisted as one JSON
object per line.  Loading a persisted log yields records equal to the
originals; damage is reported with the 1-based line number.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import CorruptLine
from .fixedpoint import check_range
from .trust import AccessTier


class AuditEventKind(str, Enum):
    SAMPLE_ACCEPTED = "sample-accepted"
    TAMPER_DETECTED = "tamper-detected"
    TRUST_UPDATED = "trust-updated"
    DECISION_ISSUED = "decision-issued"
    SESSION_OPENED = "session-opened"
    SESSION_LOCKED = "session-locked"
    SESSION_CLOSED = "session-closed"
    REPLAY_REJECTED = "replay-rejected"


@dataclass(frozen=True)
class AuditRecord:
    tick: int
    session_id: str
    event_kind: AuditEventKind
    fused_score: int | None
    trust_before: int
    trust_after: int
    tier: AccessTier | None

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise ValueError("tick must be non-negative")
        if self.fused_score is not None:
            check_range(self.fused_score, what="fused score")
        check_range(self.trust_before, what="trust before")
        check_range(self.trust_after, what="trust after")


def record_to_line(record: AuditRecord) -> str:
    payload = {
        "tick": record.tick,
        "session_id": record.session_id,
        "event_kind": record.event_kind.value,
        "fused_score": record.fused_score,
        "trust_before": record.trust_before,
        "trust_after": record.trust_after,
        "tier": None if record.tier is None else record.tier.value,
    }
    return json.dumps(payload, separators=(",", ":"))


_REQUIRED_FIELDS = (
    "tick",
    "session_id",
    "event_kind",
    "fused_score",
    "trust_before",
    "trust_after",
    "tier",
)


def record_from_line(line: str, line_no: int = 1) -> AuditRecord:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLine(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise CorruptLine(line_no, "record is not an object")
    for field in _REQUIRED_FIELDS:
        if field not in payload:
            raise CorruptLine(line_no, f"missing field {field!r}")
    try:
        kind = AuditEventKind(payload["event_kind"])
        tier_raw = payload["tier"]
        tier = None if tier_raw is None else AccessTier(tier_raw)
        fused = payload["fused_score"]
        record = AuditRecord(
            tick=payload["tick"],
            session_id=payload["session_id"],
            event_kind=kind,
            fused_score=fused,
            trust_before=payload["trust_before"],
            trust_after=payload["trust_after"],
            tier=tier,
        )
    except (ValueError, TypeError) as exc:
        raise CorruptLine(line_no, str(exc)) from exc
    if not isinstance(record.tick, int) or isinstance(record.tick, bool):
        raise CorruptLine(line_no, "tick must be an integer")
    if not isinstance(record.session_id, str):
        raise CorruptLine(line_no, "session_id must be a string")
    return record


class AuditLog:
    """Thread-safe, append-only sequence of audit records."""

    def __init__(self, records: Iterable[AuditRecord] = ()) -> None:
        self._records: list[AuditRecord] = list(records)
        self._lock = threading.Lock()

    def append(self, record: AuditRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self) -> tuple[AuditRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def __iter__(self) -> Iterator[AuditRecord]:
        return iter(self.records())

    def query(
        self,
        session_id: str | None = None,
        event_kind: AuditEventKind | None = None,
        tick_range: tuple[int, int] | None = None,
    ) -> list[AuditRecord]:
        """Filter records, preserving append order.

        ``tick_range`` bounds are inclusive on both ends.
        """
        out = []
        for rec in self.records():
            if session_id is not None and rec.session_id != session_id:
                continue
            if event_kind is not None and rec.event_kind is not event_kind:
                continue
            if tick_range is not None:
                lo, hi = tick_range
                if not lo <= rec.tick <= hi:
                    continue
            out.append(rec)
        return out


def persist_audit(log: AuditLog, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in log.records():
            fh.write(record_to_line(record))
            fh.write("\n")


def load_audit(path: str) -> AuditLog:
    records = []
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if stripped == "":
                raise CorruptLine(line_no, "blank line in log")
            records.append(record_from_line(stripped, line_no))
    return AuditLog(records)
