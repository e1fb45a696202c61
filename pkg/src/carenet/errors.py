"""Exception types shared across the package.

Every error that is part of an operation's contract lives here so callers
can catch them without importing the defining module.
"""

from __future__ import annotations


class CareNetError(Exception):
    """Base class for all package-specific errors."""


# --- trust engine ---------------------------------------------------------


class EmptyScoreList(CareNetError):
    """Fusion was asked to combine zero modality scores."""


class MixedIdentity(CareNetError):
    """Scores in one fusion batch belong to different users or devices."""


class UnreachableTier(CareNetError):
    """The requested tier can never be reached on the given branch."""


class EmptyPopulation(CareNetError):
    """EER evaluation needs at least one genuine and one impostor score."""


# --- authentication server ------------------------------------------------


class DuplicateSession(CareNetError):
    """An active session already exists for this (user, device) pair."""


class SessionNotActive(CareNetError):
    """The session is locked or closed and cannot accept samples."""


class TamperDetected(CareNetError):
    """Envelope failed integrity verification."""


class ReplayRejected(CareNetError):
    """Envelope sequence number did not advance past the last accepted one."""


class UnknownModality(CareNetError):
    """A sample referenced a modality that is not registered."""


# --- network and simulation -----------------------------------------------


class InvalidTopology(CareNetError):
    """Topology description references undeclared nodes or is malformed."""


class NoRoute(CareNetError):
    """No usable path exists between the endpoints inside the slice."""


class AlreadyIsolated(CareNetError):
    """Isolation was requested for a node that is not in normal service."""


class NotIsolated(CareNetError):
    """Reintegration was requested for a node in normal service."""


class CooldownPending(CareNetError):
    """Reintegration was requested before resolution plus cooldown elapsed."""


class AlreadyCompromised(CareNetError):
    """A compromise profile is already attached to this device."""


class TargetUnreachable(CareNetError):
    """Handover target gateway is missing or not accepting traffic."""


# --- persistence and configuration ----------------------------------------


class CorruptLine(CareNetError):
    """A persisted log line failed to parse.

    Carries the 1-based line number so operators can locate the damage.
    """

    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ConfigError(CareNetError):
    """Scenario configuration is invalid.

    ``field`` names the offending entry, e.g. ``devices[1].gateway``.
    """

    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
