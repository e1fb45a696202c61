"""Per-node traffic anomaly detection.

Each monitored node keeps an exponentially weighted baseline of the
message count it originates per observation window.  A window is
anomalous when the count sits more than ``z_threshold`` standard
deviations from the baseline mean, judged against the baseline as it
stood before the window.  Anomalous windows do not feed the baseline;
an attacker cannot drag the mean toward the flood.  Isolation is left
to the caller once ``persistence_k`` consecutive windows flag.

The variance floor keeps ordinary one-message jitter from flagging a
node whose history is nearly constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class AnomalyBaseline:
    alpha: float = 0.2
    z_threshold: float = 3.0
    persistence_k: int = 3
    var_floor: float = 1.0
    mean: float = 0.0
    variance: float = 0.0
    consecutive_hits: int = 0
    primed: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.z_threshold <= 0.0:
            raise ValueError("z threshold must be positive")
        if self.persistence_k < 1:
            raise ValueError("persistence must be at least 1")
        if self.var_floor <= 0.0:
            raise ValueError("variance floor must be positive")


@dataclass(frozen=True)
class WindowResult:
    baseline: AnomalyBaseline
    anomaly: bool
    z: float

    @property
    def should_isolate(self) -> bool:
        return self.baseline.consecutive_hits >= self.baseline.persistence_k


def observe_window(baseline: AnomalyBaseline, count: int | float) -> WindowResult:
    """Fold one window's originated-message count into the baseline.

    The first window ever observed primes the baseline and is never
    anomalous.  Later windows compare against the pre-update mean and
    variance (floored), then either update the baseline (normal window)
    or freeze it and extend the consecutive-hit run (anomalous window).
    """
    if count < 0:
        raise ValueError("window count must be non-negative")
    if not baseline.primed:
        primed = replace(
            baseline,
            mean=float(count),
            variance=0.0,
            consecutive_hits=0,
            primed=True,
        )
        return WindowResult(baseline=primed, anomaly=False, z=0.0)

    deviation = float(count) - baseline.mean
    spread = math.sqrt(max(baseline.variance, baseline.var_floor))
    z = abs(deviation) / spread
    if z > baseline.z_threshold:
        # saturates at persistence_k; the run length beyond that is irrelevant
        hits = min(baseline.consecutive_hits + 1, baseline.persistence_k)
        flagged = replace(baseline, consecutive_hits=hits)
        return WindowResult(baseline=flagged, anomaly=True, z=z)

    a = baseline.alpha
    updated = replace(
        baseline,
        mean=a * float(count) + (1.0 - a) * baseline.mean,
        variance=a * deviation * deviation + (1.0 - a) * baseline.variance,
        consecutive_hits=0,
    )
    return WindowResult(baseline=updated, anomaly=False, z=z)


def reset_hits(baseline: AnomalyBaseline) -> AnomalyBaseline:
    """Clear the consecutive-hit run, e.g. after the node is isolated."""
    return replace(baseline, consecutive_hits=0)
