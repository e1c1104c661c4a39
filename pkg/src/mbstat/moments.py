"""Per-window moments: frequency-based, market-based, VWAP and volatility.

Frequency-based moments are plain arithmetic means of n-th powers over the
trades in a window.  Market-based price moments are the ratio of the value
moment to the volume moment of the same order, which weights each trade by
its size instead of counting trades equally.  All within-window sums use
``math.fsum`` (exact accumulation), so results are independent of member
order down to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NoDataError
from .tape import TradeRecord, TradeTape
from .windows import Window, members

SERIES = ("value", "volume", "price")

#: Powers of raw currency values overflow doubles quickly on real tapes;
#: requests above the cap are rejected, not truncated.
DEFAULT_MAX_ORDER = 8


def _values(records: Sequence[TradeRecord], series: str) -> list[float]:
    if series == "value":
        return [r.value for r in records]
    if series == "volume":
        return [r.volume for r in records]
    if series == "price":
        return [r.value / r.volume for r in records]
    raise ValueError(f"unknown series {series!r}; expected one of {SERIES}")


def _check_order(n: int, max_order: int) -> None:
    if n < 1:
        raise ValueError(f"moment order must be >= 1, got {n}")
    if n > max_order:
        raise ValueError(f"moment order {n} exceeds cap {max_order}")


def freq_moment(
    records: Sequence[TradeRecord],
    series: str,
    n: int,
    max_order: int = DEFAULT_MAX_ORDER,
) -> float:
    """Mean of the n-th powers of the chosen per-trade series."""
    _check_order(n, max_order)
    xs = _values(records, series)
    if not xs:
        raise NoDataError("freq_moment over empty window")
    return math.fsum(x**n for x in xs) / len(xs)


def market_price_moment(
    records: Sequence[TradeRecord], n: int, max_order: int = DEFAULT_MAX_ORDER
) -> float:
    """n-th market-based price moment: value moment over volume moment."""
    return freq_moment(records, "value", n, max_order) / freq_moment(
        records, "volume", n, max_order
    )


def vwap(records: Sequence[TradeRecord]) -> float:
    """Volume weighted average price; identical to market_price_moment(1)."""
    return market_price_moment(records, 1)


def market_volatility(records: Sequence[TradeRecord]) -> float:
    """Market-based price variance; may legitimately be negative."""
    return market_price_moment(records, 2) - market_price_moment(records, 1) ** 2


def char_fn_taylor(
    records: Sequence[TradeRecord],
    x: float,
    order: int,
    max_order: int = DEFAULT_MAX_ORDER,
) -> complex:
    """Truncated Taylor series of the price characteristic function.

    1 + sum_{n=1..order} (i^n / n!) * p(n) * x^n, with p(n) the
    market-based price moments.
    """
    _check_order(order, max_order)
    if not records:
        raise NoDataError("char_fn_taylor over empty window")
    total = complex(1.0, 0.0)
    for n in range(1, order + 1):
        p_n = market_price_moment(records, n, max_order)
        total += (1j**n / math.factorial(n)) * p_n * x**n
    return total


@dataclass(frozen=True)
class MomentReport:
    """Per-window frequency and market-based moments, orders 1..max."""

    center_tick: int
    effective_count: int
    freq_price: tuple[float, ...]
    value: tuple[float, ...]
    volume: tuple[float, ...]
    market_price: tuple[float, ...]
    vwap: float
    market_volatility: float

    @property
    def volatility_negative(self) -> bool:
        return self.market_volatility < 0

    def to_dict(self) -> dict:
        return {
            "center_tick": self.center_tick,
            "effective_count": self.effective_count,
            "vwap": self.vwap,
            "market_volatility": self.market_volatility,
            "volatility_negative": self.volatility_negative,
            "freq_price": list(self.freq_price),
            "value": list(self.value),
            "volume": list(self.volume),
            "market_price": list(self.market_price),
        }


def compute_report(
    window: Window,
    tape: TradeTape,
    max_order: int = 4,
    order_cap: int = DEFAULT_MAX_ORDER,
) -> MomentReport:
    """Evaluate all moments of orders 1..max_order for one window."""
    _check_order(max_order, order_cap)
    recs = members(window, tape)
    if not recs:
        raise NoDataError(f"window at tick {window.center_tick} has no records")
    orders = range(1, max_order + 1)
    value_m = tuple(freq_moment(recs, "value", n, order_cap) for n in orders)
    volume_m = tuple(freq_moment(recs, "volume", n, order_cap) for n in orders)
    return MomentReport(
        center_tick=window.center_tick,
        effective_count=len(recs),
        freq_price=tuple(freq_moment(recs, "price", n, order_cap) for n in orders),
        value=value_m,
        volume=volume_m,
        market_price=tuple(c / u for c, u in zip(value_m, volume_m)),
        vwap=vwap(recs),
        market_volatility=market_volatility(recs),
    )
