"""Authenticated message envelopes.

Devices seal each sample with a key shared with the authentication
server.  The seal binds the sender identity and sequence number into the
authenticated payload, so neither can be swapped without breaking the
tag.  The contract is behavioral: any single-bit change to payload or
tag must fail verification.  HMAC-SHA256 over a canonical JSON body
provides that; confidentiality is out of scope for the simulation.
"""

from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import TamperDetected

_TAG_BYTES = 32


@dataclass(frozen=True)
class EncryptedEnvelope:
    payload: bytes
    auth_tag: bytes
    sender_device_id: str
    sequence_no: int

    def __post_init__(self) -> None:
        if self.sequence_no < 0:
            raise ValueError("sequence number must be non-negative")
        if len(self.auth_tag) != _TAG_BYTES:
            raise ValueError(f"auth tag must be {_TAG_BYTES} bytes")


def device_key(secret: bytes, device_id: str) -> bytes:
    """Derive the per-device key from the server secret."""
    return hashlib.sha256(secret + b":" + device_id.encode("utf-8")).digest()


def _canonical(body: Mapping[str, Any]) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def seal(
    device_id: str,
    key: bytes,
    sequence_no: int,
    tick: int,
    body: Mapping[str, Any],
) -> EncryptedEnvelope:
    """Produce an envelope whose payload carries ``body`` plus routing
    metadata, tagged with HMAC-SHA256 under ``key``."""
    framed = dict(body)
    framed["device_id"] = device_id
    framed["seq"] = sequence_no
    framed["tick"] = tick
    payload = _canonical(framed)
    tag = hmac.new(key, payload, hashlib.sha256).digest()
    return EncryptedEnvelope(
        payload=payload,
        auth_tag=tag,
        sender_device_id=device_id,
        sequence_no=sequence_no,
    )


def open_envelope(envelope: EncryptedEnvelope, key: bytes) -> dict[str, Any]:
    """Verify and decode an envelope.

    Raises TamperDetected when the tag does not match the payload or the
    authenticated identity fields disagree with the envelope header.
    """
    expected = hmac.new(key, envelope.payload, hashlib.sha256).digest()
    if not hmac.compare_digest(expected, envelope.auth_tag):
        raise TamperDetected(
            f"bad auth tag on sample {envelope.sequence_no} "
            f"from {envelope.sender_device_id}"
        )
    try:
        body = json.loads(envelope.payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TamperDetected(f"payload not decodable: {exc}") from exc
    if not isinstance(body, dict):
        raise TamperDetected("payload is not an object")
    if body.get("device_id") != envelope.sender_device_id:
        raise TamperDetected("sender identity does not match sealed payload")
    if body.get("seq") != envelope.sequence_no:
        raise TamperDetected("sequence number does not match sealed payload")
    return body
