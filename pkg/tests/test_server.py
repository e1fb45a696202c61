"""Authentication server pipeline tests."""

import threading

import pytest

from carenet.audit import AuditEventKind
from carenet.biometrics import ScoreDistributionSpec
from carenet.envelope import EncryptedEnvelope, device_key, seal
from carenet.errors import (
    DuplicateSession,
    ReplayRejected,
    SessionNotActive,
    TamperDetected,
    UnknownModality,
)
from carenet.fixedpoint import fp
from carenet.server import AuthServer, ModalityModel, ScorerRegistry, SessionStatus
from carenet.trust import AccessPolicy, AccessTier, TrustParams, TrustState

SECRET = b"test-enrollment-secret"
PARAMS = TrustParams(threshold=fp(0.5), reward=fp(0.05), penalty=fp(0.1))
POLICY = AccessPolicy(
    tiers=(
        (fp(0.7), AccessTier.FULL),
        (fp(0.4), AccessTier.RESTRICTED),
        (0, AccessTier.LOCKED),
    )
)


def make_registry(*modalities):
    models = {}
    for m in modalities or ("touch", "gait"):
        models[m] = ModalityModel(
            genuine=ScoreDistributionSpec(kind="genuine", mean=0.8, stddev=0.08, seed=1),
            impostor=ScoreDistributionSpec(kind="impostor", mean=0.3, stddev=0.08, seed=2),
        )
    return ScorerRegistry(models)


def make_server():
    return AuthServer(secret=SECRET, registry=make_registry())


def sample(device="dev1", seq=1, tick=0, scores=None):
    key = device_key(SECRET, device)
    return seal(device, key, seq, tick, {"kind": "auth", "scores": scores or {"touch": 8000}})


def test_open_session_starts_at_full_trust():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY, tick=0)
    assert session.trust.value == fp(1.0)
    assert session.tier is AccessTier.FULL
    assert session.status is SessionStatus.ACTIVE
    opened = server.audit.query(event_kind=AuditEventKind.SESSION_OPENED)
    assert len(opened) == 1 and opened[0].session_id == session.session_id


def test_duplicate_active_session_rejected():
    server = make_server()
    server.open_session("user1", "dev1", PARAMS, POLICY)
    with pytest.raises(DuplicateSession):
        server.open_session("user1", "dev1", PARAMS, POLICY)
    # a second device for the same user is fine
    server.open_session("user1", "dev2", PARAMS, POLICY)


def test_ingest_worked_example():
    # valid envelope, scores 0.8 and 0.9, trust 0.9 -> fused 0.85 -> 0.95, full
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    session.trust = TrustState(value=fp(0.9))
    tier, trust = server.ingest_sample(
        session, sample(scores={"touch": 8000, "gait": 9000}), tick=4
    )
    assert tier is AccessTier.FULL
    assert trust.value == fp(0.95)
    kinds = [r.event_kind for r in server.audit.query(session_id=session.session_id)]
    assert kinds == [
        AuditEventKind.SESSION_OPENED,
        AuditEventKind.SAMPLE_ACCEPTED,
        AuditEventKind.TRUST_UPDATED,
        AuditEventKind.DECISION_ISSUED,
    ]


def test_tampered_sample_leaves_trust_unchanged():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    env = sample()
    payload = bytearray(env.payload)
    payload[5] ^= 0x10
    forged = EncryptedEnvelope(
        payload=bytes(payload),
        auth_tag=env.auth_tag,
        sender_device_id=env.sender_device_id,
        sequence_no=env.sequence_no,
    )
    before = session.trust
    with pytest.raises(TamperDetected):
        server.ingest_sample(session, forged, tick=1)
    assert session.trust == before
    tampered = server.audit.query(event_kind=AuditEventKind.TAMPER_DETECTED)
    assert len(tampered) == 1
    assert tampered[0].trust_before == tampered[0].trust_after == before.value
    # the genuine envelope with that sequence number still works afterward
    tier, _ = server.ingest_sample(session, env, tick=2)
    assert tier is AccessTier.FULL


def test_replayed_sequence_rejected_once_accepted():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    env = sample(seq=7)
    server.ingest_sample(session, env, tick=1)
    trust_after_first = session.trust
    with pytest.raises(ReplayRejected):
        server.ingest_sample(session, env, tick=2)
    assert session.trust == trust_after_first  # no double update
    with pytest.raises(ReplayRejected):
        server.ingest_sample(session, sample(seq=6), tick=3)  # stale seq too
    assert len(server.audit.query(event_kind=AuditEventKind.REPLAY_REJECTED)) == 2
    # strictly increasing continues
    server.ingest_sample(session, sample(seq=8), tick=4)


def test_replay_guard_survives_session_turnover():
    server = make_server()
    s1 = server.open_session("user1", "dev1", PARAMS, POLICY)
    server.ingest_sample(s1, sample(seq=5), tick=1)
    server.close_session(s1, tick=2)
    s2 = server.open_session("user1", "dev1", PARAMS, POLICY, tick=3)
    with pytest.raises(ReplayRejected):
        server.ingest_sample(s2, sample(seq=5), tick=4)


def test_unknown_modality_rejected_without_trust_change():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    before = session.trust
    with pytest.raises(UnknownModality):
        server.ingest_sample(session, sample(scores={"iris": 9000}), tick=1)
    assert session.trust == before


def test_sender_mismatch_rejected():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    with pytest.raises(ValueError):
        server.ingest_sample(session, sample(device="dev2"), tick=1)


def test_lock_lifecycle_and_reenrollment():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    seq = 0
    # penalties all the way down: 1.0 -> 0.3999.. region needs 7 steps
    locked_tier = None
    for i in range(7):
        seq += 1
        locked_tier, _ = server.ingest_sample(
            session, sample(seq=seq, scores={"touch": 1000}), tick=i
        )
    assert locked_tier is AccessTier.LOCKED
    assert session.status is SessionStatus.LOCKED
    locked_records = server.audit.query(event_kind=AuditEventKind.SESSION_LOCKED)
    assert len(locked_records) == 1

    # locked session accepts nothing
    with pytest.raises(SessionNotActive):
        server.ingest_sample(session, sample(seq=99), tick=99)

    # re-enrollment closes the locked session and opens a fresh one
    fresh = server.open_session("user1", "dev1", PARAMS, POLICY, tick=100)
    assert fresh.session_id != session.session_id
    assert session.status is SessionStatus.CLOSED
    assert fresh.trust.value == fp(1.0)
    # but the device's replay horizon is remembered
    with pytest.raises(ReplayRejected):
        server.ingest_sample(fresh, sample(seq=3), tick=101)


def test_close_session_records_and_blocks_ingest():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    server.close_session(session, tick=9)
    assert session.status is SessionStatus.CLOSED
    with pytest.raises(SessionNotActive):
        server.ingest_sample(session, sample(), tick=10)
    with pytest.raises(SessionNotActive):
        server.close_session(session, tick=11)


def test_reauth_flag_blocks_effective_tier_until_next_accept():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    assert session.effective_tier is AccessTier.FULL
    server.flag_reauthentication(session)
    assert session.effective_tier is None
    assert session.tier is AccessTier.FULL  # raw tier unaffected
    server.ingest_sample(session, sample(seq=1), tick=5)
    assert session.effective_tier is AccessTier.FULL


def test_exact_threshold_score_holds_trust():
    server = make_server()
    session = server.open_session("user1", "dev1", PARAMS, POLICY)
    tier, trust = server.ingest_sample(session, sample(scores={"touch": 5000}), tick=1)
    assert trust.value == fp(1.0)
    assert tier is AccessTier.FULL
    updated = server.audit.query(event_kind=AuditEventKind.TRUST_UPDATED)
    assert updated[0].trust_before == updated[0].trust_after == fp(1.0)


def test_concurrent_sessions_do_not_interleave_state():
    server = make_server()
    sessions = [
        server.open_session(f"user{i}", f"dev{i}", PARAMS, POLICY) for i in range(6)
    ]
    errors = []

    def worker(idx):
        session = sessions[idx]
        device = session.device_id
        try:
            for seq in range(1, 41):
                server.ingest_sample(
                    session, sample(device=device, seq=seq, scores={"touch": 8000}),
                    tick=seq,
                )
        except Exception as exc:  # noqa: BLE001 - test surface
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    for session in sessions:
        assert session.trust.value == fp(1.0)
        assert session.trust.updates == 40
    accepted = server.audit.query(event_kind=AuditEventKind.SAMPLE_ACCEPTED)
    assert len(accepted) == 240
