"""Fixed-point arithmetic for scores and trust values.

All scores and trust values in the system live on a four-decimal grid and
are stored as scaled integers in [0, 10000].  Keeping them integral makes
every comparison exact, which matters because the trust update rule has a
dedicated branch for score == threshold, and makes serialized logs
byte-reproducible across platforms.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

SCALE = 10_000
ONE = SCALE
ZERO = 0


def fp(value: float | int | str | Decimal) -> int:
    """Quantize a unit-interval value to a scaled integer.

    Rounds half away from zero at the fourth decimal.  Raises ValueError
    for values outside [0, 1] after rounding.
    """
    if isinstance(value, bool):
        raise ValueError("boolean is not a score")
    dec = value if isinstance(value, Decimal) else Decimal(str(value))
    scaled = int((dec * SCALE).to_integral_value(rounding=ROUND_HALF_UP))
    if not 0 <= scaled <= SCALE:
        raise ValueError(f"value {value!r} outside [0, 1]")
    return scaled


def clip_fp(value: float) -> int:
    """Clip a raw real value to [0, 1] and quantize it."""
    if value <= 0.0:
        return 0
    if value >= 1.0:
        return SCALE
    return fp(value)


def as_float(scaled: int) -> float:
    return scaled / SCALE


def fmt(scaled: int) -> str:
    """Render a scaled integer as a canonical four-decimal string."""
    check_range(scaled)
    return f"{scaled // SCALE}.{scaled % SCALE:04d}"


def check_range(scaled: int, *, what: str = "value") -> int:
    if not isinstance(scaled, int) or isinstance(scaled, bool):
        raise TypeError(f"{what} must be a scaled integer, got {type(scaled).__name__}")
    if not 0 <= scaled <= SCALE:
        raise ValueError(f"{what} {scaled} outside [0, {SCALE}]")
    return scaled


def mean_half_up(values: Sequence[int]) -> int:
    """Arithmetic mean of scaled integers, rounded half up to the grid.

    Equivalent to floor(sum/n + 1/2) for non-negative inputs.
    """
    n = len(values)
    if n == 0:
        raise ValueError("mean of empty sequence")
    total = sum(values)
    return (2 * total + n) // (2 * n)
