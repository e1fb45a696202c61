"""Scenario configuration, validation, and runtime wiring.

A scenario is a TOML document declaring the topology, slices, devices,
score models, trust parameters, and the injected misbehavior schedule
(floods, takeovers, handovers).  Validation happens up front and every
complaint names the offending field; runtime construction can then
assume a coherent world.

Three presets ship with the package: a quiet home deployment, a
hospital with a credential takeover, and a road scenario with a
telemetry flood plus a network handover.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .anomaly import AnomalyBaseline
from .audit import persist_audit
from .biometrics import ScoreDistributionSpec
from .devices import CompromiseProfile, DeviceAgent, DeviceProfile, derive_seed
from .envelope import device_key
from .errors import (
    ConfigError,
    ReplayRejected,
    SessionNotActive,
    TamperDetected,
    UnknownModality,
)
from .events import RunHeader, SimEvent, write_event_log
from .fixedpoint import fp
from .network import Network, NodeKind, build_topology
from .report import build_report, write_report
from .server import AuthServer, ModalityModel, ScorerRegistry, Session
from .sim import Simulator
from .trust import AccessPolicy, AccessTier, TrustParams

DEFAULT_TRUST = {"threshold": 0.5, "reward": 0.05, "penalty": 0.1}
DEFAULT_POLICY = {"full": 0.7, "restricted": 0.4}
DEFAULT_ANOMALY = {
    "alpha": 0.2,
    "z_threshold": 3.0,
    "persistence": 3,
    "window": 10,
    "cooldown": 50,
    "var_floor": 1.0,
}
DEFAULT_HANDOVER_BUFFER = 10

BUILTIN_SCENARIOS = ("home", "hospital", "road")


@dataclass(frozen=True)
class ModalityConfig:
    genuine_mean: float
    genuine_stddev: float
    impostor_mean: float
    impostor_stddev: float


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration: int
    trust: TrustParams
    policy: AccessPolicy
    anomaly: AnomalyBaseline
    window: int
    cooldown: int
    handover_buffer: int
    server_node: str
    nodes: tuple[tuple[str, str], ...]
    links: tuple[tuple[str, str], ...]
    slices: tuple[tuple[str, tuple[str, ...], bool], ...]
    modalities: Mapping[str, ModalityConfig] = field(default_factory=dict)
    devices: tuple[DeviceProfile, ...] = ()
    compromises: tuple[tuple[str, CompromiseProfile], ...] = ()
    takeovers: tuple[tuple[str, int], ...] = ()
    handovers: tuple[tuple[str, int, str], ...] = ()


# --- parsing helpers ---------------------------------------------------------


def _get(table: Mapping[str, Any], key: str, kind: type | tuple, path: str,
         default: Any = ...) -> Any:
    if key not in table:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        want = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{path}.{key}", f"expected {want}, got {type(value).__name__}")
    return value


def _unit(table: Mapping[str, Any], key: str, path: str, default: Any = ...) -> int:
    value = _get(table, key, (int, float), path, default)
    try:
        return fp(value)
    except ValueError as exc:
        raise ConfigError(f"{path}.{key}", str(exc)) from None


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("(document)", f"TOML parse failure: {exc}") from exc

    meta = _get(doc, "scenario", dict, "(document)")
    name = _get(meta, "name", str, "scenario")
    seed = _get(meta, "seed", int, "scenario")
    duration = _get(meta, "duration", int, "scenario")
    if duration < 1:
        raise ConfigError("scenario.duration", "must be at least 1 tick")
    if seed < 0:
        raise ConfigError("scenario.seed", "must be non-negative")

    trust_tbl = _get(doc, "trust", dict, "(document)", default={})
    try:
        trust = TrustParams(
            threshold=_unit(trust_tbl, "threshold", "trust", DEFAULT_TRUST["threshold"]),
            reward=_unit(trust_tbl, "reward", "trust", DEFAULT_TRUST["reward"]),
            penalty=_unit(trust_tbl, "penalty", "trust", DEFAULT_TRUST["penalty"]),
        )
    except ValueError as exc:
        raise ConfigError("trust", str(exc)) from None

    policy_tbl = _get(doc, "policy", dict, "(document)", default={})
    try:
        policy = AccessPolicy(
            tiers=(
                (_unit(policy_tbl, "full", "policy", DEFAULT_POLICY["full"]),
                 AccessTier.FULL),
                (_unit(policy_tbl, "restricted", "policy", DEFAULT_POLICY["restricted"]),
                 AccessTier.RESTRICTED),
                (0, AccessTier.LOCKED),
            )
        )
    except ValueError as exc:
        raise ConfigError("policy", str(exc)) from None

    anom_tbl = _get(doc, "anomaly", dict, "(document)", default={})
    window = _get(anom_tbl, "window", int, "anomaly", DEFAULT_ANOMALY["window"])
    cooldown = _get(anom_tbl, "cooldown", int, "anomaly", DEFAULT_ANOMALY["cooldown"])
    if window < 1:
        raise ConfigError("anomaly.window", "must be at least 1 tick")
    if cooldown < 0:
        raise ConfigError("anomaly.cooldown", "must be non-negative")
    try:
        anomaly = AnomalyBaseline(
            alpha=_get(anom_tbl, "alpha", float, "anomaly", DEFAULT_ANOMALY["alpha"]),
            z_threshold=_get(anom_tbl, "z_threshold", float, "anomaly",
                             DEFAULT_ANOMALY["z_threshold"]),
            persistence_k=_get(anom_tbl, "persistence", int, "anomaly",
                               DEFAULT_ANOMALY["persistence"]),
            var_floor=_get(anom_tbl, "var_floor", float, "anomaly",
                           DEFAULT_ANOMALY["var_floor"]),
        )
    except ValueError as exc:
        raise ConfigError("anomaly", str(exc)) from None

    net_tbl = _get(doc, "network", dict, "(document)")
    server_node = _get(net_tbl, "server", str, "network")
    handover_buffer = _get(net_tbl, "handover_buffer", int, "network",
                           DEFAULT_HANDOVER_BUFFER)
    if handover_buffer < 0:
        raise ConfigError("network.handover_buffer", "must be non-negative")

    nodes = []
    node_ids = set()
    for i, entry in enumerate(_get(doc, "nodes", list, "(document)")):
        path = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a table")
        node_id = _get(entry, "id", str, path)
        kind = _get(entry, "kind", str, path)
        if kind not in {k.value for k in NodeKind}:
            raise ConfigError(f"{path}.kind", f"unknown node kind {kind!r}")
        if node_id in node_ids:
            raise ConfigError(f"{path}.id", f"duplicate node id {node_id!r}")
        node_ids.add(node_id)
        nodes.append((node_id, kind))
    if server_node not in node_ids:
        raise ConfigError("network.server", f"undeclared node {server_node!r}")

    links = []
    for i, entry in enumerate(_get(net_tbl, "links", list, "network", default=[])):
        path = f"network.links[{i}]"
        if (not isinstance(entry, list) or len(entry) != 2
                or not all(isinstance(e, str) for e in entry)):
            raise ConfigError(path, "expected a pair of node ids")
        a, b = entry
        for end in (a, b):
            if end not in node_ids:
                raise ConfigError(path, f"undeclared node {end!r}")
        links.append((a, b))

    slices = []
    slice_ids = set()
    slice_members: dict[str, set[str]] = {}
    for i, entry in enumerate(_get(doc, "slices", list, "(document)")):
        path = f"slices[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a table")
        slice_id = _get(entry, "id", str, path)
        members = _get(entry, "members", list, path)
        advertised = _get(entry, "advertised", bool, path, default=False)
        if slice_id in slice_ids:
            raise ConfigError(f"{path}.id", f"duplicate slice id {slice_id!r}")
        slice_ids.add(slice_id)
        for m in members:
            if not isinstance(m, str) or m not in node_ids:
                raise ConfigError(f"{path}.members", f"undeclared node {m!r}")
        slices.append((slice_id, tuple(members), advertised))
        slice_members[slice_id] = set(members)

    modalities: dict[str, ModalityConfig] = {}
    for mod_name, tbl in _get(doc, "modalities", dict, "(document)", default={}).items():
        path = f"modalities.{mod_name}"
        if not isinstance(tbl, dict):
            raise ConfigError(path, "expected a table")
        gen = _get(tbl, "genuine", dict, path)
        imp = _get(tbl, "impostor", dict, path)
        modalities[mod_name] = ModalityConfig(
            genuine_mean=_get(gen, "mean", float, f"{path}.genuine"),
            genuine_stddev=_get(gen, "stddev", float, f"{path}.genuine"),
            impostor_mean=_get(imp, "mean", float, f"{path}.impostor"),
            impostor_stddev=_get(imp, "stddev", float, f"{path}.impostor"),
        )

    devices = []
    device_ids = set()
    for i, entry in enumerate(_get(doc, "devices", list, "(document)", default=[])):
        path = f"devices[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected a table")
        device_id = _get(entry, "id", str, path)
        if device_id in device_ids:
            raise ConfigError(f"{path}.id", f"duplicate device id {device_id!r}")
        device_ids.add(device_id)
        gateway = _get(entry, "gateway", str, path)
        slice_id = _get(entry, "slice", str, path)
        public_gateway = _get(entry, "public_gateway", str, path, default=None)
        user_id = _get(entry, "user", str, path, default=None)
        mods = tuple(_get(entry, "modalities", list, path, default=[]))
        if gateway not in node_ids:
            raise ConfigError(f"{path}.gateway", f"undeclared node {gateway!r}")
        if slice_id not in slice_ids:
            raise ConfigError(f"{path}.slice", f"undeclared slice {slice_id!r}")
        if gateway not in slice_members[slice_id]:
            raise ConfigError(
                f"{path}.gateway", f"gateway {gateway!r} not in slice {slice_id!r}"
            )
        if server_node not in slice_members[slice_id]:
            raise ConfigError(
                f"{path}.slice", f"slice {slice_id!r} does not reach the server node"
            )
        if public_gateway is not None:
            if public_gateway not in node_ids:
                raise ConfigError(
                    f"{path}.public_gateway", f"undeclared node {public_gateway!r}"
                )
            if public_gateway not in slice_members[slice_id]:
                raise ConfigError(
                    f"{path}.public_gateway",
                    f"gateway {public_gateway!r} not in slice {slice_id!r}",
                )
        for m in mods:
            if m not in modalities:
                raise ConfigError(f"{path}.modalities", f"unknown modality {m!r}")
        try:
            profile = DeviceProfile(
                device_id=device_id,
                kind=_get(entry, "kind", str, path),
                period=_get(entry, "period", int, path),
                jitter=_get(entry, "jitter", int, path, default=0),
                gateway=gateway,
                slice_id=slice_id,
                seed=derive_seed(seed, "device", device_id),
                user_id=user_id,
                modalities=tuple(str(m) for m in mods),
                public_gateway=public_gateway,
                payload_bytes=_get(entry, "payload_bytes", int, path, default=128),
            )
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
        devices.append(profile)

    compromises = []
    for i, entry in enumerate(_get(doc, "compromises", list, "(document)", default=[])):
        path = f"compromises[{i}]"
        device_id = _get(entry, "device", str, path)
        if device_id not in device_ids:
            raise ConfigError(f"{path}.device", f"unknown device {device_id!r}")
        try:
            comp = CompromiseProfile(
                start_tick=_get(entry, "start", int, path),
                rate_multiplier=_get(entry, "multiplier", int, path),
                resolve_tick=_get(entry, "resolve", int, path, default=None),
            )
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
        compromises.append((device_id, comp))

    by_id = {d.device_id: d for d in devices}
    takeovers = []
    for i, entry in enumerate(_get(doc, "takeovers", list, "(document)", default=[])):
        path = f"takeovers[{i}]"
        device_id = _get(entry, "device", str, path)
        start = _get(entry, "start", int, path)
        if device_id not in device_ids:
            raise ConfigError(f"{path}.device", f"unknown device {device_id!r}")
        if by_id[device_id].user_id is None:
            raise ConfigError(f"{path}.device", "takeover target must be user-bound")
        if start < 0:
            raise ConfigError(f"{path}.start", "must be non-negative")
        takeovers.append((device_id, start))

    handovers = []
    for i, entry in enumerate(_get(doc, "handovers", list, "(document)", default=[])):
        path = f"handovers[{i}]"
        device_id = _get(entry, "device", str, path)
        tick = _get(entry, "tick", int, path)
        to = _get(entry, "to", str, path)
        if device_id not in device_ids:
            raise ConfigError(f"{path}.device", f"unknown device {device_id!r}")
        if to not in ("private", "public"):
            raise ConfigError(f"{path}.to", f"target must be private or public, got {to!r}")
        if to == "public" and by_id[device_id].public_gateway is None:
            raise ConfigError(f"{path}.device", "device has no public gateway")
        if not 0 <= tick < duration:
            raise ConfigError(f"{path}.tick", "must fall inside the run")
        handovers.append((device_id, tick, to))

    return Scenario(
        name=name,
        seed=seed,
        duration=duration,
        trust=trust,
        policy=policy,
        anomaly=anomaly,
        window=window,
        cooldown=cooldown,
        handover_buffer=handover_buffer,
        server_node=server_node,
        nodes=tuple(nodes),
        links=tuple(links),
        slices=tuple(slices),
        modalities=modalities,
        devices=tuple(devices),
        compromises=tuple(compromises),
        takeovers=tuple(takeovers),
        handovers=tuple(handovers),
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def builtin_scenario_text(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError(
            "scenario", f"unknown built-in {name!r}; choose from {BUILTIN_SCENARIOS}"
        )
    return (
        resources.files("carenet.scenarios").joinpath(f"{name}.toml").read_text("utf-8")
    )


def with_overrides(
    scenario: Scenario, seed: int | None = None, duration: int | None = None
) -> Scenario:
    from dataclasses import replace

    updated = scenario
    if seed is not None:
        if seed < 0:
            raise ConfigError("scenario.seed", "must be non-negative")
        updated = replace(updated, seed=seed)
        # device schedule seeds derive from the scenario seed
        updated = replace(
            updated,
            devices=tuple(
                DeviceProfile(
                    device_id=d.device_id,
                    kind=d.kind,
                    period=d.period,
                    jitter=d.jitter,
                    gateway=d.gateway,
                    slice_id=d.slice_id,
                    seed=derive_seed(seed, "device", d.device_id),
                    user_id=d.user_id,
                    modalities=d.modalities,
                    public_gateway=d.public_gateway,
                    payload_bytes=d.payload_bytes,
                )
                for d in scenario.devices
            ),
        )
    if duration is not None:
        if duration < 1:
            raise ConfigError("scenario.duration", "must be at least 1 tick")
        for dev, tick, _to in updated.handovers:
            if tick >= duration:
                raise ConfigError(
                    "scenario.duration",
                    f"handover for {dev!r} at tick {tick} falls outside the run",
                )
        updated = replace(updated, duration=duration)
    return updated


# --- runtime wiring ----------------------------------------------------------


@dataclass
class RuntimeBundle:
    scenario: Scenario
    network: Network
    server: AuthServer
    simulator: Simulator
    sessions: dict[str, Session]
    header: RunHeader


def build_runtime(scenario: Scenario) -> RuntimeBundle:
    network = build_topology(
        nodes=scenario.nodes,
        links=scenario.links,
        slices=scenario.slices,
        cooldown=scenario.cooldown,
        anomaly_defaults=scenario.anomaly,
    )

    secret = hashlib.sha256(f"enrollment/{scenario.seed}".encode("utf-8")).digest()
    models: dict[str, ModalityModel] = {}
    for mod_name, cfg in scenario.modalities.items():
        models[mod_name] = ModalityModel(
            genuine=ScoreDistributionSpec(
                kind="genuine",
                mean=cfg.genuine_mean,
                stddev=cfg.genuine_stddev,
                seed=derive_seed(scenario.seed, "model", mod_name, "genuine"),
            ),
            impostor=ScoreDistributionSpec(
                kind="impostor",
                mean=cfg.impostor_mean,
                stddev=cfg.impostor_stddev,
                seed=derive_seed(scenario.seed, "model", mod_name, "impostor"),
            ),
        )
    registry = ScorerRegistry(models)
    server = AuthServer(secret=secret, registry=registry)

    takeover_at = dict(scenario.takeovers)
    comp_by_device = dict(scenario.compromises)
    agents: dict[str, DeviceAgent] = {}
    for profile in scenario.devices:
        agents[profile.device_id] = DeviceAgent(
            profile=profile,
            key=device_key(secret, profile.device_id),
            destination=scenario.server_node,
            models=models,
            compromise=comp_by_device.get(profile.device_id),
            impostor_from=takeover_at.get(profile.device_id),
        )

    sessions: dict[str, Session] = {}
    for profile in scenario.devices:
        if profile.user_id is not None:
            sessions[profile.device_id] = server.open_session(
                user_id=profile.user_id,
                device_id=profile.device_id,
                params=scenario.trust,
                policy=scenario.policy,
                tick=0,
            )

    def sink(tick: int, emission) -> None:
        if emission.scores is None:
            return
        if emission.message.dst != scenario.server_node:
            return
        session = sessions.get(emission.envelope.sender_device_id)
        if session is None:
            return
        try:
            server.ingest_sample(session, emission.envelope, tick)
        except (TamperDetected, ReplayRejected, SessionNotActive, UnknownModality):
            pass  # rejection is already on the audit log

    def flag(_tick: int, device_id: str) -> None:
        session = sessions.get(device_id)
        if session is not None:
            server.flag_reauthentication(session)

    sim = Simulator(
        network=network,
        agents=agents,
        window=scenario.window,
        handover_buffer=scenario.handover_buffer,
        on_deliver=sink,
        on_handover=flag,
    )

    for device_id in sorted(agents):
        sim.schedule_emissions(device_id, scenario.duration)
    sim.schedule_observations(scenario.duration)
    for device_id, comp in scenario.compromises:
        if comp.resolve_tick is not None:
            node = agents[device_id].profile.gateway
            sim.schedule_resolve(node, comp.resolve_tick)
    for device_id, tick, to in scenario.handovers:
        sim.schedule_handover(device_id, to, tick)

    header = RunHeader(
        scenario=scenario.name,
        seed=scenario.seed,
        duration=scenario.duration,
        window=scenario.window,
        cooldown=scenario.cooldown,
        nodes=scenario.nodes,
        slices=tuple((sid, members) for sid, members, _adv in scenario.slices),
        sessions=tuple(
            (s.session_id, s.user_id, s.device_id) for s in sessions.values()
        ),
        compromises=tuple(
            {
                "device": device_id,
                "node": agents[device_id].profile.gateway,
                "start": comp.start_tick,
                "resolve": comp.resolve_tick,
                "multiplier": comp.rate_multiplier,
            }
            for device_id, comp in scenario.compromises
        ),
        handovers=tuple(
            {"device": device_id, "tick": tick, "to": to}
            for device_id, tick, to in scenario.handovers
        ),
        takeovers=tuple(
            {"device": device_id, "start": start}
            for device_id, start in scenario.takeovers
        ),
    )
    return RuntimeBundle(
        scenario=scenario,
        network=network,
        server=server,
        simulator=sim,
        sessions=sessions,
        header=header,
    )


@dataclass(frozen=True)
class RunResult:
    event_log: str
    audit_log: str
    report_file: str
    events: tuple[SimEvent, ...]
    report: Mapping[str, Any]


def run_scenario(scenario: Scenario, out_dir: str) -> RunResult:
    """Execute a scenario and write the three output artifacts."""
    import os

    bundle = build_runtime(scenario)
    sim = bundle.simulator
    events = sim.run()

    final_tick = scenario.duration
    if events:
        final_tick = max(final_tick, events[-1].tick)
    audit_records = bundle.server.audit.records()
    if audit_records:
        final_tick = max(final_tick, max(r.tick for r in audit_records))
    from .server import SessionStatus

    for session in bundle.sessions.values():
        if session.status is SessionStatus.ACTIVE:
            bundle.server.close_session(session, final_tick)

    os.makedirs(out_dir, exist_ok=True)
    event_path = os.path.join(out_dir, "events.jsonl")
    audit_path = os.path.join(out_dir, "audit.jsonl")
    report_path = os.path.join(out_dir, "report.json")

    write_event_log(event_path, bundle.header, events)
    persist_audit(bundle.server.audit, audit_path)
    report = build_report(bundle.header, events, bundle.server.audit.records())
    write_report(report, report_path)
    return RunResult(
        event_log=event_path,
        audit_log=audit_path,
        report_file=report_path,
        events=tuple(events),
        report=report,
    )
