"""Deterministic discrete-event simulation loop.

Time is integer ticks.  Scheduled work is processed in (tick, priority,
scheduling order) so a run is a pure function of its initial state:
window observations first, then isolation bookkeeping, then handovers,
then emissions, then deliveries.  Every emitted message terminates in
exactly one Deliver or Drop event.

Emissions and window observations are bounded by the configured
duration; deliveries already in flight are drained past it so the
conservation property holds for whole runs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .devices import DeviceAgent, Emission, NetworkSide
from .errors import NoRoute, TargetUnreachable
from .events import EventKind, SimEvent
from .network import IsolationPhase, Network
from .anomaly import observe_window, reset_hits

PRIO_OBSERVE = 0
PRIO_LIFECYCLE = 1
PRIO_HANDOVER = 2
PRIO_EMIT = 3
PRIO_DELIVER = 4


@dataclass
class _Pending:
    emission: Emission
    path: list[str]
    generation: int = 0


class Simulator:
    def __init__(
        self,
        network: Network,
        agents: Mapping[str, DeviceAgent],
        window: int = 10,
        handover_buffer: int = 10,
        monitored: Iterable[str] | None = None,
        on_deliver: Callable[[int, Emission], None] | None = None,
        on_handover: Callable[[int, str], None] | None = None,
    ) -> None:
        if window < 1:
            raise ValueError("window must be at least 1 tick")
        self.network = network
        self.agents = dict(agents)
        self.window = window
        self.handover_buffer = handover_buffer
        self.on_deliver = on_deliver
        self.on_handover = on_handover
        if monitored is None:
            gateways = set()
            for agent in self.agents.values():
                gateways.add(agent.profile.gateway)
                if agent.profile.public_gateway:
                    gateways.add(agent.profile.public_gateway)
            self.monitored = sorted(gateways)
        else:
            self.monitored = sorted(monitored)
        self.events: list[SimEvent] = []
        self.now = 0
        self._queue: list[tuple[int, int, int, str, Any]] = []
        self._sched_seq = 0
        self._pending: dict[str, _Pending] = {}
        self._window_counts: dict[str, int] = {}

    # -- scheduling -------------------------------------------------------------

    def _push(self, tick: int, prio: int, action: str, payload: Any) -> None:
        heapq.heappush(self._queue, (tick, prio, self._sched_seq, action, payload))
        self._sched_seq += 1

    def schedule_emissions(self, device_id: str, horizon: int) -> None:
        agent = self.agents[device_id]
        for tick in sorted(set(agent.emission_ticks(horizon))):
            self._push(tick, PRIO_EMIT, "emit", device_id)

    def schedule_observations(self, duration: int) -> None:
        for tick in range(self.window, duration + 1, self.window):
            self._push(tick, PRIO_OBSERVE, "observe", None)

    def schedule_resolve(self, node_id: str, tick: int) -> None:
        self._push(tick, PRIO_LIFECYCLE, "resolve", node_id)

    def schedule_handover(self, device_id: str, to: NetworkSide, tick: int) -> None:
        self._push(tick, PRIO_HANDOVER, "handover", (device_id, to))

    # -- event log ----------------------------------------------------------------

    def _log(self, tick: int, kind: EventKind, data: dict[str, Any]) -> SimEvent:
        event = SimEvent(tick=tick, seq=len(self.events), kind=kind, data=data)
        self.events.append(event)
        return event

    # -- main loop ----------------------------------------------------------------

    def step(self, until_tick: int) -> list[SimEvent]:
        """Process everything scheduled at or before ``until_tick``.

        Returns the events appended by this call.
        """
        if until_tick < self.now:
            raise ValueError(f"cannot step back to {until_tick} from {self.now}")
        start = len(self.events)
        while self._queue and self._queue[0][0] <= until_tick:
            self._dispatch()
        self.now = max(self.now, until_tick)
        return self.events[start:]

    def run(self) -> list[SimEvent]:
        """Drain the queue completely and return the full event list."""
        while self._queue:
            self._dispatch()
        return self.events

    def _dispatch(self) -> None:
        tick, _prio, _seq, action, payload = heapq.heappop(self._queue)
        self.now = max(self.now, tick)
        if action == "observe":
            self._process_observe(tick)
        elif action == "resolve":
            self._process_resolve(tick, payload)
        elif action == "reintegrate":
            self._process_reintegrate(tick, payload)
        elif action == "handover":
            device_id, to = payload
            try:
                self.handover(device_id, to, tick)
            except (TargetUnreachable, ValueError):
                # scheduled handover against a dead or same-side gateway
                # is dropped; config validation prevents the static cases
                pass
        elif action == "emit":
            self._process_emit(tick, payload)
        elif action == "deliver":
            self._process_deliver(tick, payload)
        else:  # pragma: no cover - scheduling bug
            raise AssertionError(f"unknown action {action!r}")

    # -- emissions and delivery ------------------------------------------------------

    def _process_emit(self, tick: int, device_id: str) -> None:
        agent = self.agents[device_id]
        for emission in agent.emit(tick):
            msg = emission.message
            node = self.network.node(msg.src)
            self._window_counts[msg.src] = self._window_counts.get(msg.src, 0) + 1
            data: dict[str, Any] = {
                "msg": msg.msg_id,
                "device": device_id,
                "node": msg.src,
                "dst": msg.dst,
                "slice": msg.slice_id,
                "seq_no": msg.seq_no,
                "size": msg.size_bytes,
            }
            if emission.scores is not None:
                data["scores"] = dict(sorted(emission.scores.items()))
                data["source"] = emission.source
            self._log(tick, EventKind.EMIT, data)

            if not node.carries_traffic:
                self._drop(tick, msg.msg_id, "isolated-egress", msg.src, msg.slice_id)
                continue
            self._dispatch_message(tick, emission)

    def _dispatch_message(self, tick: int, emission: Emission) -> None:
        msg = emission.message
        try:
            path = self.network.route(msg.src, msg.dst, msg.slice_id)
        except NoRoute:
            self._drop(tick, msg.msg_id, "no-route", msg.src, msg.slice_id)
            return
        msg.hops = tuple(path)
        pending = self._pending.get(msg.msg_id)
        if pending is None:
            pending = _Pending(emission=emission, path=list(path))
            self._pending[msg.msg_id] = pending
        else:
            pending.path = list(path)
            pending.generation += 1
        transit = len(path) - 1
        self._push(tick + transit, PRIO_DELIVER, "deliver", (msg.msg_id, pending.generation))

    def _process_deliver(self, tick: int, payload: tuple[str, int]) -> None:
        msg_id, generation = payload
        pending = self._pending.get(msg_id)
        if pending is None or pending.generation != generation:
            return  # superseded by a reroute or handover
        del self._pending[msg_id]
        msg = pending.emission.message
        self._log(
            tick,
            EventKind.DELIVER,
            {
                "msg": msg_id,
                "src": msg.src,
                "dst": msg.dst,
                "slice": msg.slice_id,
                "hops": list(pending.path),
            },
        )
        if self.on_deliver is not None:
            self.on_deliver(tick, pending.emission)

    def _drop(self, tick: int, msg_id: str, reason: str, node: str, slice_id: str) -> None:
        self._pending.pop(msg_id, None)
        self._log(
            tick,
            EventKind.DROP,
            {"msg": msg_id, "reason": reason, "node": node, "slice": slice_id},
        )

    # -- anomaly windows ----------------------------------------------------------

    def _process_observe(self, tick: int) -> None:
        for node_id in self.monitored:
            count = self._window_counts.pop(node_id, 0)
            node = self.network.node(node_id)
            if node.phase is not IsolationPhase.NORMAL:
                continue  # frozen while out of service; count discarded
            result = observe_window(node.baseline, count)
            node.baseline = result.baseline
            if result.anomaly:
                self._log(
                    tick,
                    EventKind.ANOMALY_FLAGGED,
                    {
                        "node": node_id,
                        "count": count,
                        "z": round(result.z, 6),
                        "hits": result.baseline.consecutive_hits,
                    },
                )
                if result.should_isolate:
                    self.isolate_node(node_id, tick)
        # counts for unmonitored nodes are irrelevant; clear them anyway
        self._window_counts.clear()

    # -- isolation, resolution, reintegration -----------------------------------------

    def isolate_node(self, node_id: str, tick: int) -> None:
        """Take a node out of service and reroute traffic crossing it."""
        node = self.network.node(node_id)
        self.network.isolate(node_id, tick)
        node.baseline = reset_hits(node.baseline)
        self._log(tick, EventKind.ISOLATE, {"node": node_id})
        self._reroute_crossing(tick, node_id, cause="isolation")

    def _reroute_crossing(self, tick: int, node_id: str, cause: str) -> None:
        for msg_id in sorted(self._pending):
            pending = self._pending[msg_id]
            if node_id not in pending.path:
                continue
            msg = pending.emission.message
            old_path = list(pending.path)
            try:
                new_path = self.network.route(msg.src, msg.dst, msg.slice_id)
            except NoRoute:
                self._drop(tick, msg_id, "no-route", msg.src, msg.slice_id)
                continue
            pending.path = list(new_path)
            pending.generation += 1
            msg.hops = tuple(new_path)
            self._log(
                tick,
                EventKind.REROUTE,
                {
                    "msg": msg_id,
                    "old_path": old_path,
                    "new_path": list(new_path),
                    "cause": cause,
                },
            )
            transit = len(new_path) - 1
            self._push(tick + transit, PRIO_DELIVER, "deliver", (msg_id, pending.generation))

    def _process_resolve(self, tick: int, node_id: str) -> None:
        node = self.network.node(node_id)
        if node.phase is not IsolationPhase.ISOLATED:
            return  # flood ended without tripping isolation
        self.network.resolve(node_id, tick)
        self._push(tick + self.network.cooldown, PRIO_LIFECYCLE, "reintegrate", node_id)

    def _process_reintegrate(self, tick: int, node_id: str) -> None:
        node = self.network.node(node_id)
        if node.phase is not IsolationPhase.RESOLVING:
            return
        self.network.reintegrate(node_id, tick)
        self._log(tick, EventKind.REINTEGRATE, {"node": node_id})

    # -- handover --------------------------------------------------------------------

    def handover(self, device_id: str, to: NetworkSide, tick: int) -> None:
        """Move a device between its private and public attachment.

        In-flight samples from the device are buffered up to the buffer
        bound, re-sent through the new gateway in emission order, and
        dropped beyond the bound.
        """
        agent = self.agents[device_id]
        if agent.attached == to:
            raise ValueError(f"device {device_id} already attached to {to}")
        old_gateway = agent.current_gateway
        if to == "public":
            target = agent.profile.public_gateway
        else:
            target = agent.profile.gateway
        if target is None or target not in self.network.nodes:
            raise TargetUnreachable(f"device {device_id} has no usable {to} gateway")
        if not self.network.node(target).carries_traffic:
            raise TargetUnreachable(f"gateway {target} is not accepting traffic")

        in_flight = sorted(
            (
                msg_id
                for msg_id, pending in self._pending.items()
                if pending.emission.envelope.sender_device_id == device_id
            ),
            key=lambda m: self._pending[m].emission.message.seq_no,
        )
        kept = in_flight[: self.handover_buffer]
        dropped = in_flight[self.handover_buffer:]

        self._log(
            tick,
            EventKind.HANDOVER,
            {
                "device": device_id,
                "from": old_gateway,
                "to": target,
                "buffered": len(kept),
                "dropped": len(dropped),
            },
        )
        for msg_id in dropped:
            pending = self._pending[msg_id]
            self._drop(
                tick, msg_id, "buffer-overflow", old_gateway,
                pending.emission.message.slice_id,
            )

        agent.attach(to)
        for msg_id in kept:
            pending = self._pending[msg_id]
            msg = pending.emission.message
            old_path = list(pending.path)
            msg.src = target
            try:
                new_path = self.network.route(msg.src, msg.dst, msg.slice_id)
            except NoRoute:
                self._drop(tick, msg_id, "no-route", msg.src, msg.slice_id)
                continue
            pending.path = list(new_path)
            pending.generation += 1
            msg.hops = tuple(new_path)
            self._log(
                tick,
                EventKind.REROUTE,
                {
                    "msg": msg_id,
                    "old_path": old_path,
                    "new_path": list(new_path),
                    "cause": "handover",
                },
            )
            transit = len(new_path) - 1
            self._push(tick + transit, PRIO_DELIVER, "deliver", (msg_id, pending.generation))

        if self.on_handover is not None:
            self.on_handover(tick, device_id)
