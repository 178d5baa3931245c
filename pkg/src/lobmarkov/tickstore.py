"""Streaming ingestion of tick-by-tick order files.

Rows are parsed lazily, validated, restricted to ADD events and split into
runs keyed by ``(ticker, day, side, interval)``.  Nothing here holds more
than the currently open runs in memory.
"""

from __future__ import annotations

import csv
import enum
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

__all__ = [
    "EventType",
    "Side",
    "Interval",
    "TickEvent",
    "RowDiagnostic",
    "IngestReport",
    "SchemaConfig",
    "UniverseConfig",
    "DEFAULT_INTERVALS",
    "DEFAULT_TIER_MAP",
    "DEFAULT_TRADING_DAYS",
    "parse_time_ms",
    "format_time_ms",
    "parse_tick_stream",
    "filter_side",
    "assign_interval",
    "group_runs",
    "iter_runs",
    "RunKey",
]

MS_PER_HOUR = 3_600_000
FEED_START_MS = 4 * MS_PER_HOUR
FEED_END_MS = 20 * MS_PER_HOUR


class EventType(enum.Enum):
    ADD_ASK = "ADD-ASK"
    ADD_BID = "ADD-BID"
    OTHER = "OTHER"


class Side(enum.Enum):
    ASK = "Ask"
    BID = "Bid"

    @property
    def event_type(self) -> EventType:
        return EventType.ADD_ASK if self is Side.ASK else EventType.ADD_BID

    @classmethod
    def parse(cls, text: str) -> "Side":
        low = text.strip().lower()
        for s in cls:
            if s.value.lower() == low:
                return s
        raise ValueError(f"unknown side {text!r}")


@dataclass(frozen=True, order=True)
class Interval:
    """An intraday segment with inclusive millisecond bounds."""

    name: str
    start_ms: int
    end_ms: int

    def __contains__(self, t_ms: int) -> bool:
        return self.start_ms <= t_ms <= self.end_ms

    @property
    def minutes(self) -> float:
        return (self.end_ms - self.start_ms + 1) / 60_000


def _hms(h: int, m: int, s: int, ms: int = 0) -> int:
    return ((h * 60 + m) * 60 + s) * 1000 + ms


DEFAULT_INTERVALS: Tuple[Interval, ...] = (
    Interval("T1", _hms(9, 30, 0), _hms(10, 29, 59, 999)),
    Interval("T2", _hms(10, 30, 0), _hms(11, 29, 59, 999)),
    Interval("T3", _hms(11, 30, 0), _hms(12, 44, 59, 999)),
    Interval("T4", _hms(12, 45, 0), _hms(13, 59, 59, 999)),
    Interval("T5", _hms(14, 0, 0), _hms(14, 59, 59, 999)),
    # T6 ends on the whole second 16:00:00.000, inclusive
    Interval("T6", _hms(15, 0, 0), _hms(16, 0, 0, 0)),
)

DEFAULT_TIER_MAP: Dict[str, str] = {
    **{t: "HMC" for t in ("AMZN", "JNJ", "JPM", "MSFT", "XOM")},
    **{t: "MMC" for t in ("ABBV", "HSBC", "NFLX", "ORCL", "PEP")},
    **{t: "LMC" for t in ("AVGO", "BKNG", "BMY", "NKE", "UNP")},
}

DEFAULT_TRADING_DAYS: Tuple[str, ...] = (
    # index closed higher
    "2018-11-07", "2018-11-15", "2018-11-28", "2018-12-06", "2018-12-10", "2018-12-26",
    # index closed lower
    "2018-11-09", "2018-11-12", "2018-11-14", "2018-12-04", "2018-12-07", "2018-12-21",
)

TIERS: Tuple[str, ...] = ("HMC", "MMC", "LMC")


def parse_time_ms(text: str) -> int:
    """Parse ``H:MM:SS.mmm`` / ``HH:MM:SS.mmm`` into milliseconds of day.

    The fractional part may be omitted or shorter than three digits.
    """
    hms, _, frac = text.strip().partition(".")
    parts = hms.split(":")
    if len(parts) != 3 or not frac.isdigit() and frac != "":
        raise ValueError(f"bad timestamp {text!r}")
    h, m, s = (int(p) for p in parts)
    if not (0 <= m < 60 and 0 <= s < 60 and 0 <= h < 24) or len(frac) > 3:
        raise ValueError(f"bad timestamp {text!r}")
    ms = int(frac.ljust(3, "0")) if frac else 0
    return ((h * 60 + m) * 60 + s) * 1000 + ms


def format_time_ms(t_ms: int) -> str:
    s, ms = divmod(t_ms, 1000)
    m, s = divmod(s, 60)
    h, m = divmod(m, 60)
    return f"{h:02d}:{m:02d}:{s:02d}.{ms:03d}"


@dataclass(frozen=True)
class TickEvent:
    date: str
    time_ms: int
    order_id: int
    event_type: EventType
    ticker: str
    price: float
    quantity: int
    exchange: str
    line: int = 0

    @property
    def side(self) -> Optional[Side]:
        if self.event_type is EventType.ADD_ASK:
            return Side.ASK
        if self.event_type is EventType.ADD_BID:
            return Side.BID
        return None


@dataclass(frozen=True)
class RowDiagnostic:
    line: int
    reason: str
    text: str = ""


@dataclass
class IngestReport:
    """Row accounting for one or more input files."""

    rows_read: int = 0
    rows_kept: Counter = field(default_factory=Counter)
    rejected: Counter = field(default_factory=Counter)
    diagnostics: List[RowDiagnostic] = field(default_factory=list)
    max_diagnostics: int = 100

    def reject(self, reason: str, line: int = 0, text: str = "") -> None:
        self.rejected[reason] += 1
        if len(self.diagnostics) < self.max_diagnostics:
            self.diagnostics.append(RowDiagnostic(line, reason, text))

    def merge(self, other: "IngestReport") -> None:
        self.rows_read += other.rows_read
        self.rows_kept.update(other.rows_kept)
        self.rejected.update(other.rejected)
        room = self.max_diagnostics - len(self.diagnostics)
        if room > 0:
            self.diagnostics.extend(other.diagnostics[:room])

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": {k: self.rows_kept[k] for k in sorted(self.rows_kept)},
            "rows_rejected": {k: self.rejected[k] for k in sorted(self.rejected)},
            "diagnostics": [
                {"line": d.line, "reason": d.reason, "text": d.text} for d in self.diagnostics
            ],
        }


@dataclass(frozen=True)
class SchemaConfig:
    delimiter: str = ","
    header: bool = False


@dataclass(frozen=True)
class UniverseConfig:
    tier_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_TIER_MAP))
    trading_days: Optional[Tuple[str, ...]] = DEFAULT_TRADING_DAYS
    intervals: Tuple[Interval, ...] = DEFAULT_INTERVALS

    def __post_init__(self):
        bad = sorted({t for t in self.tier_map.values()} - set(TIERS))
        if bad:
            raise ValueError(f"unknown tiers {bad}")

    @property
    def tiers(self) -> Tuple[str, ...]:
        present = set(self.tier_map.values())
        return tuple(t for t in TIERS if t in present)

    def tickers(self, tier: Optional[str] = None) -> List[str]:
        return sorted(t for t, g in self.tier_map.items() if tier is None or g == tier)

    def session_bounds(self) -> Tuple[int, int]:
        return min(iv.start_ms for iv in self.intervals), max(iv.end_ms for iv in self.intervals)


_EVENT_TYPES = {"ADD-ASK": EventType.ADD_ASK, "ADD-BID": EventType.ADD_BID,
                "ADD_ASK": EventType.ADD_ASK, "ADD_BID": EventType.ADD_BID}


class RowError(ValueError):
    def __init__(self, reason: str, detail: str):
        super().__init__(detail)
        self.reason = reason


def _parse_row(row: Sequence[str], line: int) -> TickEvent:
    if len(row) != 8:
        raise RowError("column_count", f"expected 8 columns, got {len(row)}")
    date, ts, oid, etype, ticker, price, qty, exch = row
    date = date.strip()
    if len(date) != 10 or date[4] != "-" or date[7] != "-" or not date.replace("-", "").isdigit():
        raise RowError("bad_date", f"bad date {date!r}")
    try:
        t_ms = parse_time_ms(ts)
    except ValueError:
        raise RowError("bad_timestamp", f"bad timestamp {ts!r}") from None
    if not FEED_START_MS <= t_ms <= FEED_END_MS:
        raise RowError("outside_feed_window", f"timestamp {ts!r} outside 04:00-20:00")
    try:
        p = float(price)
    except ValueError:
        raise RowError("bad_price", f"bad price {price!r}") from None
    if not 0 <= p < float("inf"):
        raise RowError("bad_price", f"bad price {price!r}")
    try:
        q = int(qty)
    except ValueError:
        raise RowError("bad_quantity", f"bad quantity {qty!r}") from None
    if q <= 0:
        raise RowError("bad_quantity", f"non-positive quantity {qty!r}")
    try:
        order_id = int(oid)
    except ValueError:
        raise RowError("bad_order_id", f"bad order id {oid!r}") from None
    et = _EVENT_TYPES.get(etype.strip().upper(), EventType.OTHER)
    return TickEvent(date, t_ms, order_id, et, ticker.strip(), p, q, exch.strip(), line)


def parse_tick_stream(
    source: Union[str, os.PathLike, TextIO, Iterable[str]],
    schema: SchemaConfig = SchemaConfig(),
    report: Optional[IngestReport] = None,
) -> Iterator[TickEvent]:
    """Lazily parse delimiter-separated tick rows.

    Parameters
    ----------
    source : path, open text stream or iterable of lines
    schema : SchemaConfig
        Delimiter and header presence.
    report : IngestReport, optional
        Receives row counts and one diagnostic per rejected row (with its
        line number).  Rows failing validation are never yielded.

    Yields
    ------
    TickEvent
        In file order.  Non-ADD rows are yielded as ``EventType.OTHER``;
        dropping them is :func:`filter_side`'s job.
    """
    if report is None:
        report = IngestReport()
    if isinstance(source, (str, os.PathLike)):
        try:
            fh = open(source, newline="")
        except OSError as exc:
            raise OSError(f"cannot open tick file {os.fspath(source)!r}: {exc}") from exc
        with fh:
            yield from parse_tick_stream(fh, schema, report)
        return

    reader = csv.reader(source, delimiter=schema.delimiter)
    for line, row in enumerate(reader, start=1):
        if line == 1 and schema.header:
            continue
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        report.rows_read += 1
        try:
            ev = _parse_row(row, line)
        except RowError as exc:
            report.reject(exc.reason, line, str(exc))
            continue
        if ev.event_type is EventType.OTHER:
            report.rejected["non_add_event"] += 1
        elif ev.price <= 0:
            report.reject("zero_price_add", line, f"{ev.event_type.value} with price {ev.price}")
            continue
        yield ev


def filter_side(events: Iterable[TickEvent], side: Side) -> Iterator[TickEvent]:
    """Keep events whose type is the ADD type of ``side``, preserving order."""
    want = side.event_type
    return (e for e in events if e.event_type is want)


def assign_interval(t_ms: int, intervals: Sequence[Interval] = DEFAULT_INTERVALS) -> Optional[Interval]:
    """Return the interval whose inclusive bounds contain ``t_ms``, else None."""
    for iv in intervals:
        if iv.start_ms <= t_ms <= iv.end_ms:
            return iv
    return None


RunKey = Tuple[str, str, Side, str]  # (ticker, day, side, interval name)


def _sort_run(run: List[Tuple[int, int, int, TickEvent]]) -> List[TickEvent]:
    run.sort(key=lambda r: r[:3])
    return [r[3] for r in run]


def group_runs(
    events: Iterable[TickEvent],
    universe: UniverseConfig = UniverseConfig(),
    report: Optional[IngestReport] = None,
) -> Dict[RunKey, List[TickEvent]]:
    """Bucket in-session ADD events by ``(ticker, day, side, interval)``.

    Each run is ordered by ``(timestamp, order_id, file position)``.  This is
    the in-memory reference; :func:`iter_runs` produces the same runs while
    streaming.
    """
    runs: Dict[RunKey, List[Tuple[int, int, int, TickEvent]]] = {}
    days = set(universe.trading_days) if universe.trading_days is not None else None
    for pos, ev in enumerate(events):
        side = ev.side
        if side is None:
            continue
        if ev.ticker not in universe.tier_map:
            if report is not None:
                report.rejected["ticker_not_in_universe"] += 1
            continue
        if days is not None and ev.date not in days:
            if report is not None:
                report.rejected["day_not_in_universe"] += 1
            continue
        iv = assign_interval(ev.time_ms, universe.intervals)
        if iv is None:
            if report is not None:
                report.rejected["out_of_session"] += 1
            continue
        key = (ev.ticker, ev.date, side, iv.name)
        runs.setdefault(key, []).append((ev.time_ms, ev.order_id, pos, ev))
        if report is not None:
            report.rows_kept[side.value] += 1
    return {k: _sort_run(v) for k, v in sorted(runs.items(), key=lambda kv: _key_order(kv[0]))}


def _key_order(key: RunKey):
    ticker, day, side, iv = key
    return (ticker, day, side.value, iv)


def iter_runs(
    events: Iterable[TickEvent],
    universe: UniverseConfig = UniverseConfig(),
    report: Optional[IngestReport] = None,
    seed_with_presession: bool = False,
) -> Iterator[Tuple[RunKey, List[TickEvent]]]:
    """Streaming variant of :func:`group_runs`.

    A run is emitted as soon as the stream's clock (largest timestamp seen on
    the same date) passes the end of its interval, or the date changes, or
    the stream ends.  Only open runs are buffered, so memory is bounded by
    the concurrently open runs rather than the file size.  Input must be
    time-ordered per date up to disorder inside an open interval; an event
    that arrives after its run was emitted is rejected as ``late_event``.

    With ``seed_with_presession`` the last pre-session ADD price of each
    ``(ticker, day, side)`` is prepended to that key's first interval run,
    so the opening price change is measured from the pre-market quote.
    """
    intervals = sorted(universe.intervals, key=lambda iv: iv.start_ms)
    session_start, _ = universe.session_bounds()
    days = set(universe.trading_days) if universe.trading_days is not None else None
    open_runs: Dict[RunKey, List[Tuple[int, int, int, TickEvent]]] = {}
    closed: set = set()
    seeds: Dict[Tuple[str, str, Side], TickEvent] = {}
    seeded: set = set()
    current_date: Optional[str] = None
    clock = -1

    def flush(pred) -> Iterator[Tuple[RunKey, List[TickEvent]]]:
        done = sorted((k for k in open_runs if pred(k)), key=_key_order)
        for k in done:
            closed.add(k)
            yield k, _sort_run(open_runs.pop(k))

    ends = {iv.name: iv.end_ms for iv in intervals}
    pos = -1
    for ev in events:
        pos += 1
        side = ev.side
        if side is None:
            continue
        if ev.ticker not in universe.tier_map:
            if report is not None:
                report.rejected["ticker_not_in_universe"] += 1
            continue
        if days is not None and ev.date not in days:
            if report is not None:
                report.rejected["day_not_in_universe"] += 1
            continue
        if ev.date != current_date:
            yield from flush(lambda k: True)
            current_date = ev.date
            clock = -1
            closed.clear()
        if ev.time_ms > clock:
            clock = ev.time_ms
            yield from flush(lambda k: ends[k[3]] < clock)
        iv = assign_interval(ev.time_ms, intervals)
        if iv is None:
            if seed_with_presession and ev.time_ms < session_start:
                seeds[(ev.ticker, ev.date, side)] = ev
            if report is not None:
                report.rejected["out_of_session"] += 1
            continue
        key = (ev.ticker, ev.date, side, iv.name)
        if key in closed:
            if report is not None:
                report.reject("late_event", ev.line, f"{ev.ticker} {format_time_ms(ev.time_ms)}")
            continue
        run = open_runs.get(key)
        if run is None:
            run = open_runs[key] = []
            sk = (ev.ticker, ev.date, side)
            if seed_with_presession and sk not in seeded:
                seeded.add(sk)
                seed = seeds.pop(sk, None)
                if seed is not None:
                    run.append((-1, 0, -1, seed))
        run.append((ev.time_ms, ev.order_id, pos, ev))
        if report is not None:
            report.rows_kept[side.value] += 1
    yield from flush(lambda k: True)

