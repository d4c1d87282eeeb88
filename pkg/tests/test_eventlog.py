import io
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T0, make_case, make_log
from proctail import (UNKNOWN_RESOURCE, ColumnMap, CustomerContactRule, Event, EventLog, PreprocessSpec,
                      descriptive_stats, parse_csv, parse_xes, preprocess, write_csv)
from proctail.eventlog import DurationMode, event_durations_ms
from proctail.exceptions import EmptyLogError, LogParseError

XES_MINIMAL = b"""<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0" xmlns="http://www.xes-standard.org/">
  <string key="concept:name" value="demo"/>
  <trace>
    <string key="concept:name" value="T1"/>
    <event>
      <string key="concept:name" value="close"/>
      <date key="time:timestamp" value="2013-01-07T09:00:00.000+01:00"/>
      <string key="org:resource" value="alice"/>
      <string key="lifecycle:transition" value="complete"/>
    </event>
    <event>
      <string key="concept:name" value="open"/>
      <date key="time:timestamp" value="2013-01-07T08:17:17.000+01:00"/>
      <int key="priority" value="3"/>
    </event>
  </trace>
</log>
"""


def test_parse_xes_minimal():
    log = parse_xes(XES_MINIMAL)
    assert len(log) == 1
    case = log.cases[0]
    assert case.case_id == "T1"
    assert case.activities == ("open", "close")  # sorted by time
    assert len(log.activity_alphabet) <= 2
    assert case.events[0].timestamp == datetime(2013, 1, 7, 7, 17, 17, tzinfo=timezone.utc)
    assert case.events[1].resource == "alice"
    assert case.events[1].lifecycle == "complete"
    assert case.events[0].extra_attributes == {"priority": 3}


def test_parse_xes_missing_resource_is_unknown():
    log = parse_xes(XES_MINIMAL)
    assert log.cases[0].events[0].resource == UNKNOWN_RESOURCE
    assert UNKNOWN_RESOURCE in log.resource_set


def test_parse_xes_group_fallback_and_nested_attribute():
    doc = XES_MINIMAL.replace(
        b'<int key="priority" value="3"/>',
        b'<string key="org:group" value="team 7"/><list key="tags"><string key="x" value="1"/></list>')
    ev = parse_xes(doc).cases[0].events[0]
    assert ev.resource == "team 7"
    assert isinstance(ev.extra_attributes["tags"], str) and "list" in ev.extra_attributes["tags"]


def test_parse_xes_invalid_event_lenient_and_strict():
    doc = XES_MINIMAL.replace(b'<date key="time:timestamp" value="2013-01-07T09:00:00.000+01:00"/>', b"")
    log = parse_xes(doc)
    assert len(log.cases[0]) == 1
    assert log.warnings and "time:timestamp" in log.warnings[0]
    with pytest.raises(LogParseError):
        parse_xes(doc, strict=True)


def test_parse_xes_trace_without_valid_events_dropped():
    doc = b"""<log><trace><string key="concept:name" value="x"/>
      <event><string key="concept:name" value="a"/></event></trace></log>"""
    log = parse_xes(doc)
    assert len(log) == 0
    assert any("no valid events" in w for w in log.warnings)


def test_parse_xes_syntax_error_reports_position():
    with pytest.raises(LogParseError) as info:
        parse_xes(b"<log><trace></log>")
    assert info.value.position is not None


def test_parse_xes_contact_rule():
    log = parse_xes(XES_MINIMAL, contact_rule=CustomerContactRule.from_patterns(["clos*"]))
    assert [e.customer_contact for e in log.cases[0].events] == [False, True]


CSV_3ROWS = """case_id,activity,timestamp,resource
c1,b,2021-01-01T10:00:00Z,r1
c1,a,2021-01-01T09:00:00Z,r2
c1,c,2021-01-01T11:00:00.5Z,
"""


def test_parse_csv_sorts_events():
    log = parse_csv(io.StringIO(CSV_3ROWS))
    assert len(log) == 1
    case = log.cases[0]
    assert case.activities == ("a", "b", "c")
    assert case.events[2].resource == UNKNOWN_RESOURCE
    assert case.events[2].timestamp.microsecond == 500000


def test_parse_csv_activity_pattern_rule():
    data = "case_id,activity,timestamp\nc1,assign,2021-01-01T09:00:00\nc1,mail to customer,2021-01-01T10:00:00\n"
    cmap = ColumnMap(customer_contact_rule=CustomerContactRule.from_patterns(["*customer*"]))
    flags = {e.activity: e.customer_contact for e in parse_csv(io.StringIO(data), cmap).cases[0].events}
    assert flags == {"mail to customer": True, "assign": False}


def test_contact_rule_matching_is_case_insensitive_substring():
    rule = CustomerContactRule.from_patterns(["Customer"])
    assert rule.matches_activity("Call CUSTOMER back")
    assert not rule.matches_activity("assign")


def test_contact_rule_validation():
    with pytest.raises(ValueError):
        CustomerContactRule("activity_patterns")
    with pytest.raises(ValueError):
        CustomerContactRule("attribute_flag")


def test_parse_csv_missing_column():
    with pytest.raises(LogParseError, match="timestamp"):
        parse_csv(io.StringIO("case_id,activity\nc1,a\n"))


def test_parse_csv_bad_timestamp_strict_and_lenient():
    data = "case_id,activity,timestamp\nc1,a,2021-01-01T09:00:00\nc1,b,not a time\n"
    log = parse_csv(io.StringIO(data))
    assert len(log.cases[0]) == 1 and "row 2" in log.warnings[0]
    with pytest.raises(LogParseError) as info:
        parse_csv(io.StringIO(data), strict=True)
    assert info.value.row == 2


def test_parse_csv_custom_format_and_delimiter():
    data = "Incident ID;DateStamp;Type;Group\nIM1;07-01-2013 08:17:17;Open;T1\nIM1;07-01-2013 09:00:00;Closed;T2\n"
    cmap = ColumnMap("Incident ID", "Type", "DateStamp", "Group", None, "%d-%m-%Y %H:%M:%S")
    log = parse_csv(io.StringIO(data), cmap, delimiter=";")
    assert log.cases[0].activities == ("Open", "Closed")
    assert log.cases[0].events[0].timestamp == datetime(2013, 1, 7, 8, 17, 17, tzinfo=timezone.utc)


def test_column_map_requires_distinct_columns():
    with pytest.raises(ValueError):
        ColumnMap(case_id_column="x", activity_column="x")


ROUNDTRIP_MAP = ColumnMap(customer_contact_rule=CustomerContactRule.from_attribute("customer_contact"))

labels = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=8)
event_st = st.tuples(labels, st.integers(0, 10**6), st.one_of(st.just(""), labels),
                     st.one_of(st.none(), st.sampled_from(["start", "complete"])), st.booleans())


@st.composite
def logs(draw):
    n = draw(st.integers(1, 6))
    cases = []
    for i in range(n):
        evs = draw(st.lists(event_st, min_size=1, max_size=6))
        events = [Event(a, T0 + timedelta(milliseconds=t), r, lc, flag) for a, t, r, lc, flag in evs]
        cases.append(make_case_from(f"case,{i}\"", events))
    return EventLog(tuple(cases))


def make_case_from(cid, events):
    from proctail import Case
    return Case.from_events(cid, events)


@settings(max_examples=60, deadline=None)
@given(logs())
def test_csv_roundtrip(log):
    buf = io.StringIO()
    write_csv(log, buf)
    back = parse_csv(io.StringIO(buf.getvalue()), ROUNDTRIP_MAP, strict=True)
    assert back == log


@settings(max_examples=60, deadline=None)
@given(logs())
def test_parsed_events_satisfy_invariants(log):
    buf = io.StringIO()
    write_csv(log, buf)
    back = parse_csv(io.StringIO(buf.getvalue()), ROUNDTRIP_MAP)
    for case in back.cases:
        assert case.events
        first = case.events[0].timestamp
        for prev, nxt in zip(case.events, case.events[1:]):
            assert prev.timestamp <= nxt.timestamp
        for e in case.events:
            assert e.activity and e.timestamp >= first
    assert back.activity_alphabet == {e.activity for c in back.cases for e in c.events}


def test_stable_sort_on_equal_timestamps():
    events = [Event(a, T0) for a in "zyx"]
    from proctail import Case
    assert Case.from_events("c", events).activities == ("z", "y", "x")


def test_duplicate_case_ids_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        EventLog((make_case("a", ["x"]), make_case("a", ["y"])))


# preprocessing ---------------------------------------------------------

def test_preprocess_without_criteria_is_identity():
    log = make_log([["a", "b"], ["c"]])
    out, report = preprocess(log, PreprocessSpec())
    assert out == log
    assert sum(report.drops.values()) == 0


def test_preprocess_start_end_filter():
    log = make_log([["open", "work", "closed"], ["work"]])
    out, report = preprocess(log, PreprocessSpec({"open"}, {"closed"}))
    assert [c.activities for c in out.cases] == [("open", "work", "closed")]
    assert report.drops["missing_start_activity"] == 1
    assert report.cases_out == 1 and not report.empty_result


def test_preprocess_min_events():
    log = make_log([["a"], ["a", "b"], ["a", "b", "c"]])
    out, _ = preprocess(log, PreprocessSpec(min_events=2))
    assert len(out) == 2


def test_preprocess_window_and_empty_flag():
    log = make_log([["a"]])
    spec = PreprocessSpec(drop_cases_outside=(T0 + timedelta(days=1), T0 + timedelta(days=2)))
    out, report = preprocess(log, spec)
    assert len(out) == 0 and report.empty_result
    assert report.drops["outside_window"] == 1


@settings(max_examples=40, deadline=None)
@given(logs(), st.integers(1, 4))
def test_preprocess_idempotent(log, min_events):
    spec = PreprocessSpec(min_events=min_events)
    once, _ = preprocess(log, spec)
    twice, report = preprocess(once, spec)
    assert once == twice and sum(report.drops.values()) == 0


def test_drop_report_serializes():
    _, report = preprocess(make_log([["a"]]), PreprocessSpec(min_events=2))
    assert '"too_few_events": 1' in report.to_json()
    assert ("dropped_too_few_events", 1) in report.to_csv_rows()


# statistics ------------------------------------------------------------

def test_stats_counts_single_case():
    st_ = descriptive_stats(make_log([["a", "a", "b"]]))
    assert st_.activity_counts == {"a": 2, "b": 1}
    assert (st_.min_trace_length, st_.max_trace_length) == (3, 3)


def test_stats_resource_involvement():
    log = EventLog((make_case("c0", ["a", "b", "c", "d"], resources=["r1", "r1", "r2", "r1"]),))
    assert descriptive_stats(log).resource_involvement == {"r1": 3, "r2": 1}


def test_stats_sorted_and_mean_durations():
    log = EventLog((make_case("c0", ["a", "b", "a"], gaps_s=[10, 30]),
                    make_case("c1", ["b", "b"], gaps_s=[50])))
    st_ = descriptive_stats(log)
    assert list(st_.activity_counts) == ["b", "a"]
    # a: durations 10 and 0; b: 30, 50, 0
    assert st_.activity_mean_duration == {"b": pytest.approx(80 / 3), "a": 5.0}
    assert list(st_.activity_mean_duration) == ["b", "a"]
    assert "summary,n_events,5" in st_.to_csv()


@settings(max_examples=40, deadline=None)
@given(logs())
def test_stats_counts_sum_to_events(log):
    st_ = descriptive_stats(log)
    assert sum(st_.activity_counts.values()) == st_.n_events == log.n_events


def test_stats_empty_log():
    with pytest.raises(EmptyLogError):
        descriptive_stats(EventLog(()))


def test_lifecycle_pair_durations():
    case = make_case("c", ["a", "b", "a", "b", "c"], gaps_s=[5, 10, 20, 40],
                     lifecycles=["start", "start", "complete", "complete", "complete"])
    assert event_durations_ms(case, DurationMode.LIFECYCLE_PAIR) == [15000, 30000, 15000, 30000, 0]
    assert event_durations_ms(case, "next_event") == [5000, 10000, 20000, 40000, 0]
