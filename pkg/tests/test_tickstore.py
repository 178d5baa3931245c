import io

import pytest
from hypothesis import given, strategies as st

from lobmarkov.tickstore import (
    DEFAULT_INTERVALS,
    EventType,
    IngestReport,
    SchemaConfig,
    Side,
    UniverseConfig,
    assign_interval,
    filter_side,
    format_time_ms,
    group_runs,
    iter_runs,
    parse_time_ms,
    parse_tick_stream,
)

ROWS = """\
2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,100.00,100,NASDAQ
2018-11-07,9:30:00.500,2,ADD-BID,AMZN,99.90,100,NASDAQ
2018-11-07,9:30:01.000,3,FILL-BID,AMZN,0,100,NASDAQ
2018-11-07,9:30:02.000,4,ADD-ASK,AMZN,101.00,200,NASDAQ
2018-11-07,9:30:02.000,5,ADD-ASK,ZZZZ,5.00,200,NASDAQ
2018-11-07,10:30:00.000,6,ADD-ASK,AMZN,102.00,200,NASDAQ
"""


def parse(text, **kw):
    rep = IngestReport()
    return list(parse_tick_stream(io.StringIO(text), SchemaConfig(**kw), rep)), rep


def test_parse_time_forms():
    assert parse_time_ms("9:30:00.000") == parse_time_ms("09:30:00.000") == 34_200_000
    assert parse_time_ms("16:00:00") == 57_600_000
    assert parse_time_ms("10:00:00.5") == 36_000_500
    for bad in ("25:00:00.000", "9:61:00.000", "9:30", "9:30:00.1234", "x:y:z"):
        with pytest.raises(ValueError):
            parse_time_ms(bad)


@given(st.integers(0, 24 * 3_600_000 - 1))
def test_time_round_trip(t):
    assert parse_time_ms(format_time_ms(t)) == t


def test_parse_rows_and_side_filter():
    events, rep = parse(ROWS)
    assert rep.rows_read == 6
    assert rep.rejected["non_add_event"] == 1
    asks = list(filter_side(events, Side.ASK))
    assert [e.order_id for e in asks] == [1, 4, 5, 6]
    assert events[2].event_type is EventType.OTHER and events[2].side is None


@pytest.mark.parametrize("row,reason", [
    ("2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,100.00,100", "column_count"),
    ("2018/11/07,9:30:00.000,1,ADD-ASK,AMZN,100.00,100,NASDAQ", "bad_date"),
    ("2018-11-07,9:3x:00.000,1,ADD-ASK,AMZN,100.00,100,NASDAQ", "bad_timestamp"),
    ("2018-11-07,3:59:59.999,1,ADD-ASK,AMZN,100.00,100,NASDAQ", "outside_feed_window"),
    ("2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,abc,100,NASDAQ", "bad_price"),
    ("2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,-1,100,NASDAQ", "bad_price"),
    ("2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,10,0,NASDAQ", "bad_quantity"),
    ("2018-11-07,9:30:00.000,x,ADD-ASK,AMZN,10,5,NASDAQ", "bad_order_id"),
    ("2018-11-07,9:30:00.000,1,ADD-ASK,AMZN,0,5,NASDAQ", "zero_price_add"),
])
def test_malformed_rows_are_counted_with_line(row, reason):
    events, rep = parse(ROWS + row + "\n")
    assert len(events) == 6
    assert rep.rejected[reason] == 1
    assert rep.diagnostics[-1].line == 7 and rep.diagnostics[-1].reason == reason


def test_header_and_delimiter():
    text = "date;ts;id;type;tk;px;q;ex\n" + ROWS.replace(",", ";")
    events, rep = parse(text, delimiter=";", header=True)
    assert len(events) == 6 and rep.rows_read == 6


def test_missing_file_names_path(tmp_path):
    with pytest.raises(OSError, match="nope.csv"):
        list(parse_tick_stream(tmp_path / "nope.csv"))


def test_interval_bounds_inclusive():
    t1, t6 = DEFAULT_INTERVALS[0], DEFAULT_INTERVALS[-1]
    assert assign_interval(parse_time_ms("9:30:00.000")).name == "T1"
    assert assign_interval(parse_time_ms("10:29:59.999")).name == "T1"
    assert assign_interval(parse_time_ms("10:30:00.000")).name == "T2"
    assert assign_interval(parse_time_ms("12:44:59.999")).name == "T3"
    assert assign_interval(parse_time_ms("16:00:00.000")).name == "T6"
    assert assign_interval(parse_time_ms("16:00:00.001")) is None
    assert assign_interval(parse_time_ms("9:29:59.999")) is None
    assert (t1.minutes, t6.minutes) == pytest.approx((60, 60), abs=0.01)


def test_group_runs_and_streaming_agree():
    events, _ = parse(ROWS)
    uni = UniverseConfig()
    rep_a, rep_b = IngestReport(), IngestReport()
    grouped = group_runs(events, uni, rep_a)
    streamed = dict(iter_runs(events, uni, rep_b))
    assert {k: [e.order_id for e in v] for k, v in grouped.items()} == \
           {k: [e.order_id for e in v] for k, v in streamed.items()}
    assert [e.order_id for e in grouped[("AMZN", "2018-11-07", Side.ASK, "T1")]] == [1, 4]
    assert rep_b.rejected["ticker_not_in_universe"] == 1
    assert rep_b.rows_kept["Ask"] == 3 and rep_b.rows_kept["Bid"] == 1


def test_same_millisecond_tie_broken_by_order_id():
    text = ("2018-11-07,9:30:00.000,9,ADD-ASK,AMZN,100.00,1,N\n"
            "2018-11-07,9:30:00.000,3,ADD-ASK,AMZN,101.00,1,N\n")
    events, _ = parse(text)
    (_, run), = iter_runs(events)
    assert [e.order_id for e in run] == [3, 9]


def test_day_and_session_filters_and_presession_seed():
    text = ("2018-11-07,8:00:00.000,1,ADD-ASK,AMZN,99.00,1,N\n"
            "2018-11-07,9:31:00.000,2,ADD-ASK,AMZN,100.00,1,N\n"
            "2018-11-07,9:32:00.000,3,ADD-ASK,AMZN,100.00,1,N\n"
            "2018-11-08,9:31:00.000,4,ADD-ASK,AMZN,100.00,1,N\n")
    events, _ = parse(text)
    rep = IngestReport()
    runs = dict(iter_runs(events, UniverseConfig(), rep))
    assert len(runs) == 1
    assert rep.rejected["out_of_session"] == 1 and rep.rejected["day_not_in_universe"] == 1
    seeded = dict(iter_runs(events, UniverseConfig(), None, seed_with_presession=True))
    assert [e.order_id for e in next(iter(seeded.values()))] == [1, 2, 3]


def test_late_event_rejected():
    text = ("2018-11-07,9:31:00.000,1,ADD-ASK,AMZN,100.00,1,N\n"
            "2018-11-07,10:31:00.000,2,ADD-ASK,AMZN,100.00,1,N\n"
            "2018-11-07,9:32:00.000,3,ADD-ASK,AMZN,100.00,1,N\n")
    events, _ = parse(text)
    rep = IngestReport()
    runs = dict(iter_runs(events, UniverseConfig(), rep))
    assert rep.rejected["late_event"] == 1
    assert sum(len(v) for v in runs.values()) == 2


def test_report_merge():
    a, b = IngestReport(), IngestReport()
    a.rows_read, b.rows_read = 3, 4
    a.reject("bad_price", 1, "x")
    b.reject("bad_price", 2, "y")
    a.merge(b)
    assert a.rows_read == 7 and a.rejected["bad_price"] == 2 and len(a.diagnostics) == 2
