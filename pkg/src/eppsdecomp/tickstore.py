"""Tick ingestion, trading-day segmentation and previous-tick resampling.

Tick file format (UTF-8 CSV, one file per symbol)::

    KO,1997-03-04,0,23400
    12,41.25
    15,41.3125
    KO,1997-03-05,0,23400
    3,41.5

A four-field line ``symbol,date,session_open,session_close`` opens a trading
day; the two-field lines that follow are ``t_seconds,price`` ticks of that
day, with ``t_seconds`` on the same clock as the session bounds. Blank lines
and lines starting with ``#`` are ignored, as is a literal column-title line
(``symbol,date,...`` or ``t_seconds,price``).
"""

from __future__ import annotations

import io
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "DataWarning",
    "TickFormatError",
    "Tick",
    "TradingDay",
    "TickSeries",
    "PriceGrid",
    "load_ticks",
    "write_ticks",
    "previous_tick_price",
    "build_grid",
    "average_intertrade_time",
]


class DataWarning(UserWarning):
    """Recoverable data-quality issue (empty input, dropped ticks, skipped days)."""


class TickFormatError(ValueError):
    """Malformed or invariant-violating tick input."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Tick:
    timestamp: int
    price: float

    def __post_init__(self):
        if not self.price > 0:
            raise ValueError(f"price must be positive, got {self.price}")


@dataclass(frozen=True, eq=False)
class TradingDay:
    """One session of ticks.

    ``times`` (int64 seconds) and ``prices`` (float64) are read-only arrays,
    times non-decreasing with at most one tick per second.
    """

    date: str
    open_offset: int
    close_offset: int
    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times, np.int64)
        prices = _frozen(self.prices, np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        if times.shape != prices.shape or times.ndim != 1:
            raise ValueError("times and prices must be 1-d arrays of equal length")
        if self.close_offset < self.open_offset:
            raise ValueError("session close precedes open")
        if times.size:
            if np.any(np.diff(times) < 0):
                raise ValueError("tick timestamps must be non-decreasing")
            if times[0] < self.open_offset or times[-1] > self.close_offset:
                raise ValueError("tick outside session bounds")
            if not np.all(prices > 0):
                raise ValueError("tick prices must be positive")

    @classmethod
    def from_ticks(cls, date, open_offset, close_offset, ticks):
        ticks = list(ticks)
        return cls(
            date,
            int(open_offset),
            int(close_offset),
            np.array([t.timestamp for t in ticks], dtype=np.int64),
            np.array([t.price for t in ticks], dtype=np.float64),
        )

    @property
    def empty(self) -> bool:
        return self.times.size == 0

    @property
    def ticks(self) -> list[Tick]:
        return [Tick(int(t), float(p)) for t, p in zip(self.times, self.prices)]

    def __len__(self):
        return int(self.times.size)


@dataclass(frozen=True)
class TickSeries:
    symbol: str
    days: tuple[TradingDay, ...] = ()
    dropped_ticks: int = 0

    def __post_init__(self):
        days = tuple(self.days)
        object.__setattr__(self, "days", days)
        for prev, cur in zip(days, days[1:]):
            if not prev.date < cur.date:
                raise ValueError(
                    f"days must be strictly increasing by date: {prev.date!r} then {cur.date!r}"
                )

    @property
    def n_ticks(self) -> int:
        return sum(len(d) for d in self.days)

    def nonempty_days(self) -> list[TradingDay]:
        return [d for d in self.days if not d.empty]

    def day(self, date) -> TradingDay:
        for d in self.days:
            if d.date == date:
                return d
        raise KeyError(date)


@dataclass(frozen=True, eq=False)
class PriceGrid:
    """Regularly spaced previous-tick prices for one day.

    ``prices[k]`` is the price at ``t_start + k * dt0``.
    """

    symbol: str
    date: str
    dt0: int
    t_start: int
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "prices", _frozen(self.prices, np.float64))

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt0 * np.arange(self.prices.size, dtype=np.int64)

    def __len__(self):
        return int(self.prices.size)


# ---------------------------------------------------------------------------
# parsing

_TITLE_LINES = {"symbol,date,session_open,session_close", "t_seconds,price"}


def _open_source(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=""), str(source), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), None, True
    if isinstance(source, io.TextIOBase):
        return source, getattr(source, "name", None), False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8"), getattr(source, "name", None), False


def _finish_day(header, rows, tolerance, path, symbol_counts):
    """Validate and normalise one day's raw rows into a TradingDay."""
    symbol, date, open_, close, header_line = header
    times = []
    prices = []
    last_t = None
    dropped = 0
    for line_no, t, p in rows:
        if last_t is not None and t < last_t:
            if last_t - t > tolerance:
                raise TickFormatError(
                    f"timestamp regression from {last_t} to {t}", line_no, path
                )
        last_t = t if last_t is None else max(last_t, t)
        if t < open_ or t > close:
            dropped += 1
            continue
        times.append(t)
        prices.append(p)
    if dropped:
        symbol_counts["dropped"] += dropped
    times = np.asarray(times, dtype=np.int64)
    prices = np.asarray(prices, dtype=np.float64)
    if times.size:
        # stable sort absorbs tolerated regressions; the last tick of a second wins
        order = np.argsort(times, kind="stable")
        times = times[order]
        prices = prices[order]
        keep = np.ones(times.size, dtype=bool)
        keep[:-1] = times[1:] != times[:-1]
        times = times[keep]
        prices = prices[keep]
    return TradingDay(date, open_, close, times, prices)


def load_ticks(source, fmt="csv", timestamp_tolerance=0) -> TickSeries:
    """Parse a tick file into a :class:`TickSeries`.

    Parameters
    ----------
    source : path, bytes, or text/binary stream
        Tick data in the format described in the module docstring.
    fmt : str
        Format descriptor; only ``"csv"`` is supported.
    timestamp_tolerance : int
        Largest backwards jump of timestamps (seconds) accepted within a day.
        Tolerated regressions are re-sorted; larger ones are an error.

    Out-of-session ticks are dropped and counted (``DataWarning``). Sub-second
    timestamps are floored. Days without ticks are kept but flagged empty.
    """
    if fmt != "csv":
        raise ValueError(f"unsupported tick format {fmt!r}")
    stream, path, owned = _open_source(source)
    symbol = None
    days = []
    header = None
    rows = []
    counts = {"dropped": 0}
    try:
        for line_no, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.lower() in _TITLE_LINES:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) == 4:
                if header is not None:
                    days.append(_finish_day(header, rows, timestamp_tolerance, path, counts))
                sym, date, open_s, close_s = fields
                try:
                    open_ = math.floor(float(open_s))
                    close = math.floor(float(close_s))
                except ValueError:
                    raise TickFormatError("bad session bounds", line_no, path) from None
                if close < open_:
                    raise TickFormatError("session close precedes open", line_no, path)
                if not sym or not date:
                    raise TickFormatError("empty symbol or date", line_no, path)
                if symbol is None:
                    symbol = sym
                elif sym != symbol:
                    raise TickFormatError(
                        f"symbol changed from {symbol!r} to {sym!r}", line_no, path
                    )
                if days and not days[-1].date < date:
                    raise TickFormatError(
                        f"day {date!r} does not follow {days[-1].date!r}", line_no, path
                    )
                header = (sym, date, open_, close, line_no)
                rows = []
            elif len(fields) == 2:
                if header is None:
                    raise TickFormatError("tick row before any day header", line_no, path)
                try:
                    t = float(fields[0])
                    p = float(fields[1])
                except ValueError:
                    raise TickFormatError(f"cannot parse row {line!r}", line_no, path) from None
                if not math.isfinite(t) or not math.isfinite(p):
                    raise TickFormatError("non-finite value", line_no, path)
                if not p > 0:
                    raise TickFormatError(f"non-positive price {fields[1]}", line_no, path)
                rows.append((line_no, math.floor(t), p))
            else:
                raise TickFormatError(
                    f"expected 2 or 4 fields, got {len(fields)}", line_no, path
                )
        if header is not None:
            days.append(_finish_day(header, rows, timestamp_tolerance, path, counts))
    finally:
        if owned:
            stream.close()

    if not days:
        warnings.warn(f"no trading days in {path or 'input'}", DataWarning, stacklevel=2)
    if counts["dropped"]:
        warnings.warn(
            f"dropped {counts['dropped']} out-of-session ticks", DataWarning, stacklevel=2
        )
    empty = [d.date for d in days if d.empty]
    if empty:
        logger.info("%d empty day(s) flagged: %s", len(empty), ", ".join(empty))
    return TickSeries(symbol or "", tuple(days), counts["dropped"])


def _format_number(x):
    return format(x, ".17g")


def iter_tick_lines(series: TickSeries) -> Iterator[str]:
    for day in series.days:
        yield f"{series.symbol},{day.date},{day.open_offset},{day.close_offset}\n"
        for t, p in zip(day.times.tolist(), day.prices.tolist()):
            yield f"{t},{_format_number(p)}\n"


def write_ticks(series: TickSeries, target) -> None:
    """Write ``series`` in the tick file format (path or text stream)."""
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(iter_tick_lines(series))
    else:
        target.writelines(iter_tick_lines(series))


# ---------------------------------------------------------------------------
# previous-tick estimator


def previous_tick_price(day: TradingDay, t) -> float | None:
    """Price of the latest tick at or before ``t``; ``None`` before the first tick."""
    idx = int(np.searchsorted(day.times, t, side="right")) - 1
    if idx < 0:
        return None
    return float(day.prices[idx])


def _previous_tick_fill(day: TradingDay, grid_times: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(day.times, grid_times, side="right") - 1
    return day.prices[idx]


def build_grid(day: TradingDay, dt0: int, symbol: str = "") -> PriceGrid:
    """Resample a day onto the lattice ``open + k*dt0`` by the previous-tick rule.

    The grid starts at the first lattice point at or after the first tick and
    ends at the last lattice point not beyond the session close; earlier
    points are skipped rather than back-filled.
    """
    if dt0 != int(dt0) or dt0 < 1:
        raise ValueError(f"dt0 must be a positive integer number of seconds, got {dt0}")
    dt0 = int(dt0)
    session = day.close_offset - day.open_offset
    if dt0 > session:
        raise ValueError(f"dt0={dt0} exceeds the session length {session}")
    if day.empty:
        raise ValueError(f"day {day.date} has no ticks")
    first = int(day.times[0]) - day.open_offset
    k0 = -(-first // dt0)
    k1 = session // dt0
    if k1 < k0:
        return PriceGrid(symbol, day.date, dt0, day.open_offset + k0 * dt0, np.empty(0))
    grid_times = day.open_offset + dt0 * np.arange(k0, k1 + 1, dtype=np.int64)
    return PriceGrid(symbol, day.date, dt0, int(grid_times[0]), _previous_tick_fill(day, grid_times))


def build_grids(series: TickSeries, dt0: int) -> list[PriceGrid]:
    """Grids for every non-empty day of ``series`` (days sorted by date)."""
    return [build_grid(d, dt0, series.symbol) for d in series.days if not d.empty]


def average_intertrade_time(series: TickSeries) -> float:
    """Mean gap between successive same-day ticks, pooled over all days."""
    gaps = [np.diff(d.times) for d in series.days if len(d) >= 2]
    if not gaps:
        raise ValueError("need at least one day with two or more ticks")
    total = sum(int(g.sum()) for g in gaps)
    count = sum(g.size for g in gaps)
    return total / count


def days_in_common(a: Sequence, b: Sequence) -> list[str]:
    dates_b = {d.date for d in b}
    return [d.date for d in a if d.date in dates_b]
