"""Device-tier agents: emission schedules and sealed samples.

A device emits approximately periodically with seeded jitter.  A flood
compromise replaces the normal schedule with one running at a rate
multiple from its start tick until resolution; after resolution the
normal cadence resumes.  Takeover of a user-bound device switches its
score source from the genuine to the impostor distribution without
touching keys or sequence numbers, which is exactly what makes
continuous authentication the only line of defense.

Schedules and score streams are pure functions of configuration and
seed, so the same device produces the same emissions in every run.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Any, Iterator, Literal

from .biometrics import ScoreDistributionSpec, SourceKind, score_stream
from .envelope import EncryptedEnvelope, seal
from .errors import AlreadyCompromised
from .server import ModalityModel

NetworkSide = Literal["private", "public"]


def derive_seed(*parts: object) -> int:
    """Stable sub-seed from a root seed and a label path."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    kind: Literal["wearable", "ambient", "implant"]
    period: int
    jitter: int
    gateway: str
    slice_id: str
    seed: int
    user_id: str | None = None
    modalities: tuple[str, ...] = ()
    public_gateway: str | None = None
    payload_bytes: int = 128

    def __post_init__(self) -> None:
        if self.kind not in ("wearable", "ambient", "implant"):
            raise ValueError(f"unknown device kind {self.kind!r}")
        if self.period < 1:
            raise ValueError("emission period must be at least 1 tick")
        if not 0 <= self.jitter < self.period:
            raise ValueError("jitter must satisfy 0 <= jitter < period")
        if self.payload_bytes < 1:
            raise ValueError("payload size must be positive")
        if self.user_id is not None and not self.modalities:
            raise ValueError("user-bound device needs at least one modality")
        if self.user_id is None and self.modalities:
            raise ValueError("ambient device cannot carry user modalities")


@dataclass(frozen=True)
class CompromiseProfile:
    start_tick: int
    rate_multiplier: int
    kind: Literal["flood"] = "flood"
    resolve_tick: int | None = None

    def __post_init__(self) -> None:
        if self.kind != "flood":
            raise ValueError(f"unknown compromise kind {self.kind!r}")
        if self.start_tick < 0:
            raise ValueError("compromise start must be non-negative")
        if self.rate_multiplier < 2:
            raise ValueError("rate multiplier below 2 is not a flood")
        if self.resolve_tick is not None and self.resolve_tick <= self.start_tick:
            raise ValueError("resolution must come after the compromise starts")


@dataclass
class SimMessage:
    msg_id: str
    src: str
    dst: str
    slice_id: str
    size_bytes: int
    created_tick: int
    seq_no: int
    hops: tuple[str, ...] = ()


@dataclass(frozen=True)
class Emission:
    """One scheduled emission: sealed envelope plus network message.

    ``scores`` and ``source`` describe ground truth for user-bound
    devices and are simulation-side knowledge, never part of the sealed
    payload.
    """

    envelope: EncryptedEnvelope
    message: SimMessage
    scores: dict[str, int] | None
    source: SourceKind | None


class DeviceAgent:
    """Stateful emitter for one device."""

    def __init__(
        self,
        profile: DeviceProfile,
        key: bytes,
        destination: str,
        models: dict[str, ModalityModel] | None = None,
        compromise: CompromiseProfile | None = None,
        impostor_from: int | None = None,
    ) -> None:
        if profile.user_id is not None:
            missing = [m for m in profile.modalities if m not in (models or {})]
            if missing:
                raise ValueError(f"no score model for modalities {missing}")
        self.profile = profile
        self.key = key
        self.destination = destination
        self.compromise = compromise
        self.impostor_from = impostor_from
        self.attached: NetworkSide = "private"
        self._next_seq = 1
        self._emitted = 0
        self._cursor = 0
        self._schedule: list[int] | None = None
        self._horizon: int | None = None
        self._streams: dict[tuple[str, SourceKind], Iterator[int]] = {}
        if profile.user_id is not None and models:
            for modality in profile.modalities:
                model = models[modality]
                for kind, spec in (("genuine", model.genuine), ("impostor", model.impostor)):
                    derived = ScoreDistributionSpec(
                        kind=spec.kind,
                        mean=spec.mean,
                        stddev=spec.stddev,
                        seed=derive_seed(spec.seed, profile.device_id, modality, kind),
                    )
                    self._streams[(modality, kind)] = score_stream(derived)

    # -- wiring ---------------------------------------------------------------

    @property
    def current_gateway(self) -> str:
        if self.attached == "public":
            assert self.profile.public_gateway is not None
            return self.profile.public_gateway
        return self.profile.gateway

    def attach(self, side: NetworkSide) -> None:
        if side == "public" and self.profile.public_gateway is None:
            raise ValueError(f"device {self.profile.device_id} has no public gateway")
        self.attached = side

    def inject_compromise(self, compromise: CompromiseProfile) -> None:
        """Attach a flood profile.  Must happen before emissions start."""
        if self.compromise is not None:
            raise AlreadyCompromised(
                f"device {self.profile.device_id} already compromised at "
                f"tick {self.compromise.start_tick}"
            )
        if self._cursor > 0:
            raise ValueError("cannot inject a compromise after emissions began")
        self.compromise = compromise
        self._schedule = None

    def set_impostor_from(self, tick: int) -> None:
        if self.profile.user_id is None:
            raise ValueError("takeover only applies to user-bound devices")
        self.impostor_from = tick

    # -- schedule ---------------------------------------------------------------

    def emission_ticks(self, horizon: int) -> list[int]:
        """All emission ticks strictly below ``horizon``, ascending.

        Pure in (profile, compromise, horizon); repeated calls with the
        same horizon return the same list.
        """
        if self._schedule is not None and self._horizon == horizon:
            return list(self._schedule)
        if self._cursor > 0:
            raise ValueError("schedule is frozen once emissions began")
        self._schedule = self._build_schedule(horizon)
        self._horizon = horizon
        return list(self._schedule)

    def _build_schedule(self, horizon: int) -> list[int]:
        prof = self.profile
        rng = random.Random(derive_seed(prof.seed, prof.device_id, "schedule"))
        normal: list[int] = []
        k = 0
        while k * prof.period < horizon + prof.period:
            jitter = rng.randint(-prof.jitter, prof.jitter) if prof.jitter else 0
            tick = max(0, k * prof.period + jitter)
            if tick < horizon:
                normal.append(tick)
            k += 1

        comp = self.compromise
        if comp is None or comp.start_tick >= horizon:
            return sorted(normal)

        flood_end = horizon if comp.resolve_tick is None else min(comp.resolve_tick, horizon)
        flood: list[int] = []
        j = 0
        while True:
            tick = comp.start_tick + (j * prof.period) // comp.rate_multiplier
            if tick >= flood_end:
                break
            flood.append(tick)
            j += 1

        keep = [t for t in normal if t < comp.start_tick or t >= flood_end]
        return sorted(keep + flood)

    # -- emission ---------------------------------------------------------------

    def emit(self, tick: int) -> list[Emission]:
        """Produce every emission scheduled exactly at ``tick``.

        Calls must come in nondecreasing tick order; the schedule must
        have been materialized via ``emission_ticks`` first.
        """
        if self._schedule is None:
            raise ValueError("emission schedule not materialized")
        out = []
        while self._cursor < len(self._schedule) and self._schedule[self._cursor] <= tick:
            due = self._schedule[self._cursor]
            if due < tick:
                raise ValueError(f"emission at tick {due} was skipped (now {tick})")
            out.append(self._emit_one(tick))
            self._cursor += 1
        return out

    def _emit_one(self, tick: int) -> Emission:
        prof = self.profile
        seq = self._next_seq
        self._next_seq += 1
        index = self._emitted
        self._emitted += 1

        scores: dict[str, int] | None = None
        source: SourceKind | None = None
        if prof.user_id is not None:
            source = (
                "impostor"
                if self.impostor_from is not None and tick >= self.impostor_from
                else "genuine"
            )
            scores = {
                modality: next(self._streams[(modality, source)])
                for modality in prof.modalities
            }
            body: dict[str, Any] = {"kind": "auth", "scores": dict(sorted(scores.items()))}
        else:
            body = {"kind": "telemetry"}

        envelope = seal(prof.device_id, self.key, seq, tick, body)
        message = SimMessage(
            msg_id=f"{prof.device_id}:{index}",
            src=self.current_gateway,
            dst=self.destination,
            slice_id=prof.slice_id,
            size_bytes=prof.payload_bytes,
            created_tick=tick,
            seq_no=seq,
        )
        return Emission(envelope=envelope, message=message, scores=scores, source=source)
