"""Continuous-authentication trust engine.

A session's trust level is a scaled fixed-point value in [0, 10000]
(see :mod:`carenet.fixedpoint`).  Each batch of modality scores is fused
into a single score by arithmetic mean, then trust moves by a fixed
reward or penalty step depending on which side of the threshold the
fused score falls on.  A score exactly on the threshold leaves trust
unchanged.  Access is granted in tiers by comparing trust against a
descending ladder of inclusive lower bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal, Sequence

from .errors import EmptyScoreList, MixedIdentity, UnreachableTier
from .fixedpoint import SCALE, check_range, mean_half_up


class AccessTier(str, Enum):
    FULL = "full"
    RESTRICTED = "restricted"
    LOCKED = "locked"


@dataclass(frozen=True)
class ModalityScore:
    """One classifier output for one behavioral modality."""

    modality: str
    value: int
    device_id: str
    user_id: str
    tick: int

    def __post_init__(self) -> None:
        check_range(self.value, what=f"{self.modality} score")
        if not self.modality:
            raise ValueError("modality name must be non-empty")
        if self.tick < 0:
            raise ValueError("tick must be non-negative")


@dataclass(frozen=True)
class FusedScore:
    value: int
    n_modalities: int

    def __post_init__(self) -> None:
        check_range(self.value, what="fused score")
        if self.n_modalities < 1:
            raise ValueError("fused score needs at least one modality")


@dataclass(frozen=True)
class TrustParams:
    """Step sizes and decision threshold, all scaled integers."""

    threshold: int
    reward: int
    penalty: int

    def __post_init__(self) -> None:
        check_range(self.threshold, what="threshold")
        check_range(self.reward, what="reward")
        check_range(self.penalty, what="penalty")
        if self.reward == 0 or self.penalty == 0:
            raise ValueError("reward and penalty must be positive")
        if self.threshold in (0, SCALE):
            # a boundary threshold makes one branch unreachable
            raise ValueError("threshold must sit strictly between 0 and 1")


@dataclass(frozen=True)
class TrustState:
    value: int
    updates: int = 0
    last_update: int = 0

    def __post_init__(self) -> None:
        check_range(self.value, what="trust")
        if self.updates < 0:
            raise ValueError("update count must be non-negative")


@dataclass(frozen=True)
class AccessPolicy:
    """Descending ladder of (inclusive lower bound, tier) pairs.

    The final bound must be 0 so every trust value maps to some tier.
    """

    tiers: tuple[tuple[int, AccessTier], ...]

    def __post_init__(self) -> None:
        if not self.tiers:
            raise ValueError("policy needs at least one tier")
        bounds = [b for b, _ in self.tiers]
        for bound in bounds:
            check_range(bound, what="tier bound")
        if any(hi <= lo for hi, lo in zip(bounds, bounds[1:])):
            raise ValueError("tier bounds must be strictly descending")
        if bounds[-1] != 0:
            raise ValueError("lowest tier bound must be 0")


def fuse_scores(scores: Sequence[ModalityScore]) -> FusedScore:
    """Combine modality scores for one (user, device) pair by mean.

    The mean is rounded half up back onto the four-decimal grid.
    """
    if not scores:
        raise EmptyScoreList("cannot fuse an empty score batch")
    first = scores[0]
    for s in scores[1:]:
        if s.user_id != first.user_id or s.device_id != first.device_id:
            raise MixedIdentity(
                f"scores mix ({first.user_id}, {first.device_id}) "
                f"with ({s.user_id}, {s.device_id})"
            )
    fused = mean_half_up([s.value for s in scores])
    return FusedScore(value=fused, n_modalities=len(scores))


def update_trust(
    state: TrustState,
    fused: FusedScore,
    params: TrustParams,
    tick: int | None = None,
) -> TrustState:
    """Apply one trust step.

    Below threshold: subtract the penalty, floor at 0.  Above: add the
    reward, cap at 1.  Exactly on the threshold: trust is unchanged but
    the update still counts.
    """
    if fused.value < params.threshold:
        value = max(0, state.value - params.penalty)
    elif fused.value > params.threshold:
        value = min(SCALE, state.value + params.reward)
    else:
        value = state.value
    return TrustState(
        value=value,
        updates=state.updates + 1,
        last_update=state.last_update if tick is None else tick,
    )


def decide_access(state: TrustState, policy: AccessPolicy) -> AccessTier:
    """Return the tier of the first ladder rung at or below trust."""
    for bound, tier in policy.tiers:
        if state.value >= bound:
            return tier
    raise AssertionError("policy ladder must end at bound 0")


Branch = Literal["all-penalty", "all-reward"]


def steps_to_tier(
    start: TrustState,
    params: TrustParams,
    policy: AccessPolicy,
    branch: Branch,
    target: AccessTier,
) -> int:
    """Count updates until ``decide_access`` first returns ``target``.

    The branch is forced: every step is a penalty or every step is a
    reward.  Returns 0 when the start state already maps to the target.
    Raises UnreachableTier when trust saturates without reaching it.
    """
    if branch not in ("all-penalty", "all-reward"):
        raise ValueError(f"unknown branch {branch!r}")
    if target not in {tier for _, tier in policy.tiers}:
        raise UnreachableTier(f"policy has no tier {target.value!r}")
    state = start
    steps = 0
    while decide_access(state, policy) is not target:
        if branch == "all-penalty":
            value = max(0, state.value - params.penalty)
        else:
            value = min(SCALE, state.value + params.reward)
        if value == state.value:
            raise UnreachableTier(
                f"trust saturated at {state.value} before reaching {target.value}"
            )
        state = TrustState(value=value, updates=state.updates + 1)
        steps += 1
    return steps


def tier_names(policy: AccessPolicy) -> Iterable[str]:
    return (tier.value for _, tier in policy.tiers)
