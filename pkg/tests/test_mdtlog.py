import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleepscan.errors import DataError, ParseError
from sleepscan.mdtlog import (
    EVENTS_BY_NAME,
    TARGETED_EVENTS,
    WIRE_NAMES,
    Call,
    EventId,
    MdtRecord,
    group_calls,
    make_fold_pairs,
    parse_log,
    read_records,
    write_records,
)

GOLDEN_CODES = {
    "PL PROBLEM": 0,
    "RLF": 1,
    "RLF REESTAB.": 2,
    "A2 RSRP ENTER": 3,
    "A2 RSRP LEAVE": 4,
    "A2 RSRQ ENTER": 5,
    "A3 RSRP": 6,
    "HO COMMAND": 7,
    "HO COMPLETE": 8,
}


def test_event_codes_are_stable():
    assert len(EventId) == 9
    for name, code in GOLDEN_CODES.items():
        assert int(EVENTS_BY_NAME[name]) == code
    assert {WIRE_NAMES[e] for e in EventId} == set(GOLDEN_CODES)


def _rec(event=EventId.RLF, ue=1, t=0, x=0.0, y=0.0, serving=1, target=None):
    if event in TARGETED_EVENTS and target is None:
        target = 2
    return MdtRecord(event=event, ue=ue, t=t, x=x, y=y, serving=serving, target=target)


def test_parse_empty_file(tmp_path):
    path = tmp_path / "log.jsonl"
    path.write_text("")
    assert parse_log(path) == []


def test_grouping_and_lengths(tmp_path):
    records = [
        _rec(ue=7, t=0),
        _rec(ue=9, t=1),
        _rec(ue=7, t=1),
        _rec(ue=9, t=3),
        _rec(ue=7, t=2),
    ]
    path = tmp_path / "log.jsonl"
    write_records(records, path)
    calls = parse_log(path)
    assert [c.ue for c in calls] == [7, 9]
    assert [len(c) for c in calls] == [3, 2]


def test_missing_target_is_an_error_with_line(tmp_path):
    path = tmp_path / "log.jsonl"
    good = _rec().to_json()
    bad = json.dumps(
        {"ue": 1, "t": 2, "event": "HO COMMAND", "x": 0.0, "y": 0.0, "serving": 1, "target": None}
    )
    path.write_text(good + "\n" + bad + "\n")
    with pytest.raises(ParseError) as err:
        parse_log(path)
    assert err.value.lineno == 2
    assert "HO COMMAND" in str(err.value)


def test_unknown_event_and_bad_coordinate(tmp_path):
    path = tmp_path / "log.jsonl"
    path.write_text(json.dumps({"ue": 1, "t": 0, "event": "NOPE", "x": 0, "y": 0, "serving": 1}) + "\n")
    with pytest.raises(ParseError, match="unknown event"):
        parse_log(path)
    path.write_text(
        json.dumps({"ue": 1, "t": 0, "event": "RLF", "x": "wat", "y": 0, "serving": 1}) + "\n"
    )
    with pytest.raises(ParseError, match="non-numeric"):
        parse_log(path)
    path.write_text(json.dumps({"ue": 1, "event": "RLF", "x": 0, "y": 0, "serving": 1}) + "\n")
    with pytest.raises(ParseError, match="missing required field"):
        parse_log(path)


def test_tie_in_t_keeps_file_order(tmp_path):
    records = [
        _rec(ue=1, t=5, event=EventId.RLF),
        _rec(ue=1, t=5, event=EventId.RLF_REESTAB, target=3),
        _rec(ue=1, t=5, event=EventId.A2_RSRQ_ENTER),
    ]
    path = tmp_path / "log.jsonl"
    write_records(records, path)
    (call,) = parse_log(path)
    assert call.events() == [EventId.RLF, EventId.RLF_REESTAB, EventId.A2_RSRQ_ENTER]


events_st = st.sampled_from(list(EventId))
records_st = st.lists(
    st.builds(
        _rec,
        event=events_st,
        ue=st.integers(0, 5),
        t=st.integers(0, 50),
        x=st.floats(-1000, 1000, allow_nan=False),
        y=st.floats(-1000, 1000, allow_nan=False),
        serving=st.integers(1, 21),
        target=st.integers(1, 21),
    ),
    max_size=40,
)


@settings(max_examples=50, deadline=None)
@given(records_st)
def test_roundtrip_is_field_exact(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("rt") / "log.jsonl"
    write_records(records, path)
    assert read_records(path) == records
    # grouped calls match direct grouping of the in-memory records
    assert parse_log(path) == group_calls(records)


def test_fold_pairs_cross_product():
    pairs = make_fold_pairs("normal", list(range(6)), "problematic", list(range(6)))
    assert len(pairs) == 36
    assert len({(p.train_index, p.test_index) for p in pairs}) == 36
    assert all(p.train_role != p.test_role for p in pairs)
    assert len(make_fold_pairs("normal", [0], "reference", [0])) == 1
    with pytest.raises(DataError):
        make_fold_pairs("normal", list(range(6)), "problematic", [])
