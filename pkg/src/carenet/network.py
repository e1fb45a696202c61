"""Sliced network topology, routing, and node isolation.

Slices partition traffic: a message may only traverse nodes belonging
to its slice.  Routing is shortest-path with a deterministic tie-break,
the lexicographically smallest node sequence, so two runs over the same
topology always pick the same path.  Isolated nodes carry no traffic at
all; a resolved node waits out a cooldown before rejoining.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .anomaly import AnomalyBaseline
from .errors import (
    AlreadyIsolated,
    CooldownPending,
    InvalidTopology,
    NoRoute,
    NotIsolated,
)


class NodeKind(str, Enum):
    DEVICE_GATEWAY = "device-gateway"
    EDGE = "edge"
    CORE = "core"
    PUBLIC_GATEWAY = "public-gateway"


class IsolationPhase(str, Enum):
    NORMAL = "normal"
    ISOLATED = "isolated"
    RESOLVING = "resolving"


@dataclass
class NetworkNode:
    node_id: str
    kind: NodeKind
    slice_memberships: frozenset[str] = frozenset()
    phase: IsolationPhase = IsolationPhase.NORMAL
    isolated_since: int | None = None
    resolved_at: int | None = None
    baseline: AnomalyBaseline = field(default_factory=AnomalyBaseline)

    @property
    def carries_traffic(self) -> bool:
        return self.phase is IsolationPhase.NORMAL


@dataclass(frozen=True)
class Slice:
    """Named traffic partition.

    ``advertised`` records whether the slice is announced to attaching
    devices; it does not change routing.
    """

    slice_id: str
    members: frozenset[str]
    advertised: bool = False


class Network:
    def __init__(
        self,
        nodes: Mapping[str, NetworkNode],
        adjacency: Mapping[str, frozenset[str]],
        slices: Mapping[str, Slice],
        cooldown: int = 50,
    ) -> None:
        self.nodes = dict(nodes)
        self._adjacency = {k: frozenset(v) for k, v in adjacency.items()}
        self.slices = dict(slices)
        self.cooldown = cooldown

    def node(self, node_id: str) -> NetworkNode:
        return self.nodes[node_id]

    def neighbors(self, node_id: str) -> frozenset[str]:
        return self._adjacency.get(node_id, frozenset())

    def slice_members(self, slice_id: str) -> frozenset[str]:
        return self.slices[slice_id].members

    # -- isolation lifecycle -------------------------------------------------

    def isolate(self, node_id: str, tick: int) -> None:
        node = self.nodes[node_id]
        if node.phase is not IsolationPhase.NORMAL:
            raise AlreadyIsolated(f"node {node_id} is {node.phase.value}")
        node.phase = IsolationPhase.ISOLATED
        node.isolated_since = tick
        node.resolved_at = None

    def resolve(self, node_id: str, tick: int) -> None:
        """Mark the incident on an isolated node as resolved.

        The node stays out of service until cooldown elapses and
        ``reintegrate`` is called.
        """
        node = self.nodes[node_id]
        if node.phase is not IsolationPhase.ISOLATED:
            raise NotIsolated(f"node {node_id} is {node.phase.value}")
        node.phase = IsolationPhase.RESOLVING
        node.resolved_at = tick

    def reintegrate(self, node_id: str, tick: int) -> None:
        node = self.nodes[node_id]
        if node.phase is IsolationPhase.NORMAL:
            raise NotIsolated(f"node {node_id} is in normal service")
        if node.phase is IsolationPhase.ISOLATED or node.resolved_at is None:
            raise CooldownPending(f"node {node_id} has no recorded resolution")
        if tick < node.resolved_at + self.cooldown:
            raise CooldownPending(
                f"node {node_id} eligible at {node.resolved_at + self.cooldown}, "
                f"asked at {tick}"
            )
        node.phase = IsolationPhase.NORMAL
        node.isolated_since = None
        node.resolved_at = None

    # -- routing ---------------------------------------------------------------

    def route(self, src: str, dst: str, slice_id: str) -> list[str]:
        """Shortest path from src to dst inside the slice.

        Only nodes in normal service are usable.  Among equally short
        paths the lexicographically smallest node sequence wins.  Raises
        NoRoute when no usable path exists, including when either
        endpoint is out of service.
        """
        if slice_id not in self.slices:
            raise NoRoute(f"unknown slice {slice_id!r}")
        members = self.slices[slice_id].members
        if src not in members or dst not in members:
            raise ValueError(
                f"route endpoints ({src!r}, {dst!r}) must belong to slice {slice_id!r}"
            )
        usable = {
            n for n in members
            if self.nodes[n].carries_traffic
        }
        if src not in usable or dst not in usable:
            raise NoRoute(f"endpoint out of service between {src!r} and {dst!r}")
        if src == dst:
            return [src]

        # distances to dst over the usable slice subgraph
        dist = {dst: 0}
        frontier = deque([dst])
        while frontier:
            cur = frontier.popleft()
            for nxt in self._adjacency.get(cur, frozenset()):
                if nxt in usable and nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    frontier.append(nxt)
        if src not in dist:
            raise NoRoute(f"no usable path from {src!r} to {dst!r} in {slice_id!r}")

        # walking to smaller distances via smallest node id yields the
        # lexicographically least shortest path
        path = [src]
        cur = src
        while cur != dst:
            nxt = min(
                n
                for n in self._adjacency.get(cur, frozenset())
                if n in dist and dist[n] == dist[cur] - 1
            )
            path.append(nxt)
            cur = nxt
        return path


def build_topology(
    nodes: Sequence[tuple[str, str | NodeKind]],
    links: Sequence[tuple[str, str]],
    slices: Iterable[tuple[str, Sequence[str], bool]] | Mapping[str, Sequence[str]],
    cooldown: int = 50,
    anomaly_defaults: AnomalyBaseline | None = None,
) -> Network:
    """Validate a declarative topology description and wire it up.

    Every link endpoint and slice member must be a declared node; the
    first offending element is named in the error.
    """
    node_map: dict[str, NetworkNode] = {}
    for node_id, kind in nodes:
        if node_id in node_map:
            raise InvalidTopology(f"duplicate node id {node_id!r}")
        if not node_id:
            raise InvalidTopology("empty node id")
        kind_enum = kind if isinstance(kind, NodeKind) else NodeKind(kind)
        baseline = anomaly_defaults if anomaly_defaults is not None else AnomalyBaseline()
        node_map[node_id] = NetworkNode(node_id=node_id, kind=kind_enum, baseline=baseline)

    adjacency: dict[str, set[str]] = {n: set() for n in node_map}
    seen_links: set[frozenset[str]] = set()
    for a, b in links:
        if a not in node_map:
            raise InvalidTopology(f"link ({a!r}, {b!r}) references undeclared node {a!r}")
        if b not in node_map:
            raise InvalidTopology(f"link ({a!r}, {b!r}) references undeclared node {b!r}")
        if a == b:
            raise InvalidTopology(f"self-link on node {a!r}")
        key = frozenset((a, b))
        if key in seen_links:
            raise InvalidTopology(f"duplicate link ({a!r}, {b!r})")
        seen_links.add(key)
        adjacency[a].add(b)
        adjacency[b].add(a)

    slice_items: Iterable[tuple[str, Sequence[str], bool]]
    if isinstance(slices, Mapping):
        slice_items = [(sid, members, False) for sid, members in slices.items()]
    else:
        slice_items = slices

    slice_map: dict[str, Slice] = {}
    memberships: dict[str, set[str]] = {n: set() for n in node_map}
    for slice_id, members, advertised in slice_items:
        if slice_id in slice_map:
            raise InvalidTopology(f"duplicate slice id {slice_id!r}")
        if not members:
            raise InvalidTopology(f"slice {slice_id!r} has no members")
        member_set = set()
        for m in members:
            if m not in node_map:
                raise InvalidTopology(
                    f"slice {slice_id!r} references undeclared node {m!r}"
                )
            if m in member_set:
                raise InvalidTopology(f"slice {slice_id!r} lists {m!r} twice")
            member_set.add(m)
            memberships[m].add(slice_id)
        slice_map[slice_id] = Slice(
            slice_id=slice_id, members=frozenset(member_set), advertised=advertised
        )

    for node_id, node in node_map.items():
        node.slice_memberships = frozenset(memberships[node_id])

    return Network(
        nodes=node_map,
        adjacency={k: frozenset(v) for k, v in adjacency.items()},
        slices=slice_map,
        cooldown=cooldown,
    )
