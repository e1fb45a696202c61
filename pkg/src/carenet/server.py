"""Authentication server: sessions, sample ingest, and decisions.

The server owns one trust state per session.  Every accepted sample
walks the same pipeline: envelope verification, replay check, fusion,
trust update, access decision.  Each stage that matters for forensics
appends an audit record; rejected samples never touch trust.

Replay detection is per device and survives session turnover: a device
key that re-enrolls cannot reuse old sequence numbers.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from .audit import AuditEventKind, AuditLog, AuditRecord
from .biometrics import ScoreDistributionSpec
from .envelope import EncryptedEnvelope, device_key, open_envelope
from .errors import (
    DuplicateSession,
    ReplayRejected,
    SessionNotActive,
    TamperDetected,
    UnknownModality,
)
from .fixedpoint import ONE, check_range
from .trust import (
    AccessPolicy,
    AccessTier,
    ModalityScore,
    TrustParams,
    TrustState,
    decide_access,
    fuse_scores,
    update_trust,
)


class SessionStatus(str, Enum):
    ACTIVE = "active"
    LOCKED = "locked"
    CLOSED = "closed"


@dataclass
class Session:
    session_id: str
    user_id: str
    device_id: str
    trust: TrustState
    params: TrustParams
    policy: AccessPolicy
    status: SessionStatus = SessionStatus.ACTIVE
    opened_at: int = 0
    needs_reauth: bool = False

    @property
    def tier(self) -> AccessTier:
        return decide_access(self.trust, self.policy)

    @property
    def effective_tier(self) -> AccessTier | None:
        """Tier honored by the network right now.

        None while a post-handover re-authentication is pending or the
        session is not active.
        """
        if self.status is not SessionStatus.ACTIVE or self.needs_reauth:
            return None
        return self.tier


@dataclass(frozen=True)
class ModalityModel:
    """Registered score model for one modality."""

    genuine: ScoreDistributionSpec
    impostor: ScoreDistributionSpec


class ScorerRegistry:
    """Known modalities and their score models."""

    def __init__(self, models: Mapping[str, ModalityModel] | None = None) -> None:
        self._models: dict[str, ModalityModel] = dict(models or {})

    def register(self, modality: str, model: ModalityModel) -> None:
        self._models[modality] = model

    def model(self, modality: str) -> ModalityModel:
        try:
            return self._models[modality]
        except KeyError:
            raise UnknownModality(f"modality {modality!r} is not registered") from None

    def __contains__(self, modality: str) -> bool:
        return modality in self._models

    def modalities(self) -> tuple[str, ...]:
        return tuple(sorted(self._models))


class AuthServer:
    """Continuous-authentication endpoint for user-bound devices."""

    def __init__(
        self,
        secret: bytes,
        registry: ScorerRegistry,
        audit_log: AuditLog | None = None,
    ) -> None:
        self._secret = secret
        self._registry = registry
        self.audit = audit_log if audit_log is not None else AuditLog()
        self._sessions: dict[str, Session] = {}
        self._current: dict[tuple[str, str], Session] = {}
        self._last_seq: dict[str, int] = {}
        self._pair_counter: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}

    # -- session lifecycle --------------------------------------------------

    def open_session(
        self,
        user_id: str,
        device_id: str,
        params: TrustParams,
        policy: AccessPolicy,
        tick: int = 0,
        initial_trust: int = ONE,
    ) -> Session:
        """Open a session at full initial trust.

        An existing active session for the pair is an error.  A locked
        one is closed first; re-enrollment is the only way out of a lock.
        """
        check_range(initial_trust, what="initial trust")
        with self._lock:
            existing = self._current.get((user_id, device_id))
            if existing is not None and existing.status is SessionStatus.ACTIVE:
                raise DuplicateSession(
                    f"active session {existing.session_id} already covers "
                    f"({user_id}, {device_id})"
                )
            if existing is not None and existing.status is SessionStatus.LOCKED:
                self._close_locked(existing, tick)
            n = self._pair_counter.get((user_id, device_id), 0) + 1
            self._pair_counter[(user_id, device_id)] = n
            session = Session(
                session_id=f"s-{user_id}-{device_id}-{n}",
                user_id=user_id,
                device_id=device_id,
                trust=TrustState(value=initial_trust, updates=0, last_update=tick),
                params=params,
                policy=policy,
                opened_at=tick,
            )
            self._sessions[session.session_id] = session
            self._current[(user_id, device_id)] = session
            self._session_locks[session.session_id] = threading.Lock()
        self.audit.append(
            AuditRecord(
                tick=tick,
                session_id=session.session_id,
                event_kind=AuditEventKind.SESSION_OPENED,
                fused_score=None,
                trust_before=session.trust.value,
                trust_after=session.trust.value,
                tier=session.tier,
            )
        )
        return session

    def _close_locked(self, session: Session, tick: int) -> None:
        session.status = SessionStatus.CLOSED
        self.audit.append(
            AuditRecord(
                tick=tick,
                session_id=session.session_id,
                event_kind=AuditEventKind.SESSION_CLOSED,
                fused_score=None,
                trust_before=session.trust.value,
                trust_after=session.trust.value,
                tier=None,
            )
        )

    def close_session(self, session: Session, tick: int) -> None:
        if session.status is SessionStatus.CLOSED:
            raise SessionNotActive(f"session {session.session_id} already closed")
        session.status = SessionStatus.CLOSED
        self.audit.append(
            AuditRecord(
                tick=tick,
                session_id=session.session_id,
                event_kind=AuditEventKind.SESSION_CLOSED,
                fused_score=None,
                trust_before=session.trust.value,
                trust_after=session.trust.value,
                tier=None,
            )
        )

    def session(self, session_id: str) -> Session:
        return self._sessions[session_id]

    def current_session(self, user_id: str, device_id: str) -> Session | None:
        return self._current.get((user_id, device_id))

    def flag_reauthentication(self, session: Session) -> None:
        """Require a fresh accepted sample before the tier is honored again."""
        session.needs_reauth = True

    def key_for(self, device_id: str) -> bytes:
        return device_key(self._secret, device_id)

    # -- ingest --------------------------------------------------------------

    def ingest_sample(
        self,
        session: Session,
        envelope: EncryptedEnvelope,
        tick: int,
    ) -> tuple[AccessTier, TrustState]:
        """Run one sample through the verification and trust pipeline.

        Raises on any rejection; trust is untouched unless the sample is
        accepted end to end.
        """
        lock = self._session_locks[session.session_id]
        with lock:
            if session.status is not SessionStatus.ACTIVE:
                raise SessionNotActive(
                    f"session {session.session_id} is {session.status.value}"
                )
            if envelope.sender_device_id != session.device_id:
                raise ValueError(
                    f"envelope from {envelope.sender_device_id!r} offered to "
                    f"session bound to {session.device_id!r}"
                )
            trust_before = session.trust

            key = self.key_for(session.device_id)
            try:
                body = open_envelope(envelope, key)
            except TamperDetected:
                self._audit(
                    tick, session, AuditEventKind.TAMPER_DETECTED,
                    None, trust_before.value, trust_before.value, None,
                )
                raise

            last = self._last_seq.get(session.device_id, -1)
            if envelope.sequence_no <= last:
                self._audit(
                    tick, session, AuditEventKind.REPLAY_REJECTED,
                    None, trust_before.value, trust_before.value, None,
                )
                raise ReplayRejected(
                    f"sequence {envelope.sequence_no} does not advance past {last} "
                    f"for device {session.device_id}"
                )

            scores = self._decode_scores(body, session, tick)
            fused = fuse_scores(scores)
            updated = update_trust(trust_before, fused, session.params, tick=tick)
            tier = decide_access(updated, session.policy)

            self._last_seq[session.device_id] = envelope.sequence_no
            session.trust = updated
            session.needs_reauth = False

            self._audit(
                tick, session, AuditEventKind.SAMPLE_ACCEPTED,
                fused.value, trust_before.value, trust_before.value, None,
            )
            self._audit(
                tick, session, AuditEventKind.TRUST_UPDATED,
                fused.value, trust_before.value, updated.value, None,
            )
            self._audit(
                tick, session, AuditEventKind.DECISION_ISSUED,
                fused.value, updated.value, updated.value, tier,
            )
            if tier is AccessTier.LOCKED:
                session.status = SessionStatus.LOCKED
                self._audit(
                    tick, session, AuditEventKind.SESSION_LOCKED,
                    fused.value, updated.value, updated.value, tier,
                )
            return tier, updated

    def _decode_scores(
        self, body: Mapping[str, Any], session: Session, tick: int
    ) -> list[ModalityScore]:
        raw = body.get("scores")
        if not isinstance(raw, dict) or not raw:
            raise ValueError("sample carries no modality scores")
        scores = []
        for modality in sorted(raw):
            if modality not in self._registry:
                raise UnknownModality(f"modality {modality!r} is not registered")
            scores.append(
                ModalityScore(
                    modality=modality,
                    value=raw[modality],
                    device_id=session.device_id,
                    user_id=session.user_id,
                    tick=tick,
                )
            )
        return scores

    def _audit(
        self,
        tick: int,
        session: Session,
        kind: AuditEventKind,
        fused: int | None,
        before: int,
        after: int,
        tier: AccessTier | None,
    ) -> None:
        self.audit.append(
            AuditRecord(
                tick=tick,
                session_id=session.session_id,
                event_kind=kind,
                fused_score=fused,
                trust_before=before,
                trust_after=after,
                tier=tier,
            )
        )
