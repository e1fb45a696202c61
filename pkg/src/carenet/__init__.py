"""Continuous-authentication trust engine and health-network simulation.

The package has three layers: a fixed-point trust engine with synthetic
biometrics (:mod:`trust`, :mod:`biometrics`), an authentication server
with sealed envelopes and an append-only audit log (:mod:`server`,
:mod:`envelope`, :mod:`audit`), and a deterministic discrete-event
simulation of devices on a sliced network with anomaly-triggered
isolation (:mod:`network`, :mod:`anomaly`, :mod:`devices`, :mod:`sim`).
Scenarios tie the layers together and the CLI runs them end to end.
"""

from .anomaly import AnomalyBaseline, WindowResult, observe_window
from .audit import AuditEventKind, AuditLog, AuditRecord, load_audit, persist_audit
from .biometrics import (
    PRESET_CALIBRATION,
    ScoreDistributionSpec,
    compute_eer,
    generate_scores,
    preset_spec,
)
from .devices import (
    CompromiseProfile,
    DeviceAgent,
    DeviceProfile,
    Emission,
    SimMessage,
    derive_seed,
)
from .envelope import EncryptedEnvelope, device_key, open_envelope, seal
from .errors import (
    AlreadyCompromised,
    AlreadyIsolated,
    CareNetError,
    ConfigError,
    CooldownPending,
    CorruptLine,
    DuplicateSession,
    EmptyPopulation,
    EmptyScoreList,
    InvalidTopology,
    MixedIdentity,
    NoRoute,
    NotIsolated,
    ReplayRejected,
    SessionNotActive,
    TamperDetected,
    TargetUnreachable,
    UnknownModality,
    UnreachableTier,
)
from .events import EventKind, RunHeader, SimEvent, read_event_log, write_event_log
from .fixedpoint import ONE, SCALE, as_float, fmt, fp, mean_half_up
from .network import (
    IsolationPhase,
    Network,
    NetworkNode,
    NodeKind,
    Slice,
    build_topology,
)
from .report import build_report, report_from_logs, write_report
from .scenario import (
    BUILTIN_SCENARIOS,
    RuntimeBundle,
    Scenario,
    build_runtime,
    builtin_scenario_text,
    load_scenario,
    parse_scenario,
    run_scenario,
    with_overrides,
)
from .server import (
    AuthServer,
    ModalityModel,
    ScorerRegistry,
    Session,
    SessionStatus,
)
from .sim import Simulator
from .trust import (
    AccessPolicy,
    AccessTier,
    FusedScore,
    ModalityScore,
    TrustParams,
    TrustState,
    decide_access,
    fuse_scores,
    steps_to_tier,
    update_trust,
)

__version__ = "0.1.0"
