"""Averaging-window planning over a trade tape.

Windows have odd width N ticks and centers that advance by the moving
average lag step.  Only windows fully contained in the tape span are
emitted; windows with fewer records than ``min_trades`` are flagged
invalid rather than dropped.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .tape import TradeRecord, TradeTape


@dataclass(frozen=True)
class WindowSpec:
    """Window width N (odd, in ticks), center stride and validity floor."""

    n_ticks: int
    lag_step_ticks: int
    min_trades: int = 1

    def __post_init__(self):
        if self.n_ticks < 1 or self.n_ticks % 2 == 0:
            raise ValueError(f"window width must be odd and >= 1, got {self.n_ticks}")
        if not (1 <= self.lag_step_ticks <= self.n_ticks):
            raise ValueError(
                f"lag step must satisfy 1 <= step <= {self.n_ticks}, got {self.lag_step_ticks}"
            )
        if self.min_trades < 1:
            raise ValueError(f"min_trades must be >= 1, got {self.min_trades}")

    @property
    def half_width(self) -> int:
        return (self.n_ticks - 1) // 2


@dataclass(frozen=True)
class Window:
    """Resolved window: center, member ticks present on the tape, validity."""

    center_tick: int
    member_ticks: tuple[int, ...]
    valid: bool

    @property
    def count(self) -> int:
        return len(self.member_ticks)


def plan_windows(tape: TradeTape, spec: WindowSpec) -> list[Window]:
    """Windows centered at multiples of the lag step, fully inside the tape.

    Returns an empty list when the tape span is shorter than the window.
    """
    if not tape.records:
        raise ValueError("tape is empty")
    h = spec.half_width
    step = spec.lag_step_ticks
    first, last = tape.first_tick, tape.last_tick
    k_lo = math.ceil((first + h) / step)
    k_hi = math.floor((last - h) / step)
    all_ticks = [r.tick for r in tape.records]
    out: list[Window] = []
    for k in range(k_lo, k_hi + 1):
        center = k * step
        lo = bisect.bisect_left(all_ticks, center - h)
        hi = bisect.bisect_right(all_ticks, center + h)
        ticks = tuple(all_ticks[lo:hi])
        out.append(Window(center, ticks, valid=len(ticks) >= spec.min_trades))
    return out


def members(window: Window, tape: TradeTape) -> list[TradeRecord]:
    """Records at the window's member ticks, in tick order."""
    return [tape.record_at(t) for t in window.member_ticks]
