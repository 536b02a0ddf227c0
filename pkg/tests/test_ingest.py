import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from celltriage.errors import InputError
from celltriage.ingest import (
    DEFAULT_SCHEMA,
    Radio,
    Reason,
    TowerRecord,
    parse_dataset,
    validate_record,
    write_records,
)

from conftest import random_records

HEADER = "radio,mcc,net,area,cell,unit,lon,lat,range,samples,changeable,created,updated,averageSignal\n"


def row(radio="LTE", lat="24.86", lon="67.00", rng="1365", samples="7", created="1700000000", updated="1700086400", cell="1"):
    return f"{radio},410,1,100,{cell},,{lon},{lat},{rng},{samples},1,{created},{updated},0\n"


def raw(**over):
    base = {
        "radio": "LTE", "mcc": "410", "net": "1", "area": "100", "cell": "5",
        "lat": "24.86", "lon": "67.00", "range": "1365", "samples": "7",
        "created": "1700000000", "updated": "1700086400",
    }
    base.update(over)
    return base


def test_three_clean_rows():
    text = HEADER + row("GSM", cell="1") + row("UMTS", cell="2") + row("LTE", cell="3")
    records, report = parse_dataset(text)
    assert [r.radio for r in records] == [Radio.GSM, Radio.UMTS, Radio.LTE]
    assert report.quarantined == []
    assert report.accepted_count == 3


@pytest.mark.parametrize(
    "kwargs, reason",
    [
        ({"rng": "0"}, Reason.NON_POSITIVE_RANGE),
        ({"rng": "-5"}, Reason.NON_POSITIVE_RANGE),
        ({"radio": "NR"}, Reason.BAD_RADIO),
        ({"radio": "CDMA"}, Reason.BAD_RADIO),
        ({"lat": "95.0"}, Reason.BAD_COORDINATE),
        ({"lon": "-180.5"}, Reason.BAD_COORDINATE),
        ({"samples": "-1"}, Reason.NEGATIVE_SAMPLES),
        ({"updated": "1699999999"}, Reason.TIMESTAMP_ORDER),
        ({"samples": "seven"}, Reason.PARSE_FAILURE),
        ({"lat": "nan"}, Reason.PARSE_FAILURE),
    ],
)
def test_single_bad_row_is_quarantined(kwargs, reason):
    records, report = parse_dataset(HEADER + row(**kwargs))
    assert records == []
    assert report.quarantined == [(1, reason)]


def test_validate_record_clean():
    rec = validate_record(raw())
    assert isinstance(rec, TowerRecord)
    assert rec.range_m == 1365 and rec.samples == 7
    assert rec.lat == 24.86 and rec.lon == 67.0


def test_validate_record_check_order():
    # several problems at once: the earliest check in the order wins
    assert validate_record(raw(radio="NR", samples="x")) is Reason.PARSE_FAILURE
    assert validate_record(raw(radio="NR", lat="95")) is Reason.BAD_RADIO
    assert validate_record(raw(lat="95", range="0")) is Reason.BAD_COORDINATE
    assert validate_record(raw(range="0", samples="-1")) is Reason.NON_POSITIVE_RANGE
    assert validate_record(raw(samples="-1", updated="1")) is Reason.NEGATIVE_SAMPLES
    assert validate_record(raw(updated="1")) is Reason.TIMESTAMP_ORDER


def test_missing_header_column_is_fatal():
    with pytest.raises(InputError):
        parse_dataset("radio,mcc,net\nLTE,410,1\n")


def test_empty_source_is_fatal():
    with pytest.raises(InputError):
        parse_dataset("")


def test_custom_schema_maps_renamed_headers():
    schema = dict(DEFAULT_SCHEMA, samples="n_samples", range="cell_range")
    text = "radio,mcc,net,area,cell,lon,lat,cell_range,n_samples,created,updated\nLTE,410,1,2,3,67,24,500,9,10,20\n"
    records, report = parse_dataset(text, schema)
    assert report.accepted_count == 1
    assert records[0].samples == 9 and records[0].range_m == 500


def test_short_row_is_parse_failure_and_blank_lines_skipped():
    text = HEADER + row() + "\n" + "LTE,410,1\n" + row(cell="2")
    records, report = parse_dataset(text)
    assert len(records) == 2
    assert report.quarantined == [(2, Reason.PARSE_FAILURE)]


def test_quarantine_jsonl():
    _, report = parse_dataset(HEADER + row() + row(rng="0") + row(radio="NR"))
    lines = [json.loads(x) for x in report.to_jsonl().splitlines()]
    assert lines == [{"row": 2, "reason": "NonPositiveRange"}, {"row": 3, "reason": "BadRadio"}]


def test_round_trip_random_records():
    recs = random_records(random.Random(3), 300)
    buf = io.StringIO()
    write_records(recs, buf)
    again, report = parse_dataset(buf.getvalue())
    assert again == recs
    assert report.quarantined == []


def test_determinism(fixture_csv):
    text = fixture_csv.read_text()
    assert parse_dataset(text) == parse_dataset(text)


cell_text = st.one_of(
    st.text(alphabet="0123456789-.eNRLTGSMU ", max_size=8),
    st.integers(-10**6, 10**10).map(str),
    st.floats(allow_nan=True).map(str),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(cell_text, min_size=9, max_size=12), max_size=30))
def test_row_conservation_property(rows):
    lines = ["radio,mcc,net,area,cell,lon,lat,range,samples,created,updated"]
    for r in rows:
        lines.append(",".join(c.replace(",", "") for c in r))
    text = "\n".join(lines) + "\n"
    records, report = parse_dataset(text)
    nonblank = sum(1 for r in rows if any(c.replace(",", "").strip() for c in r))
    assert report.accepted_count == len(records)
    assert report.total == nonblank
    rows_seen = [n for n, _ in report.quarantined]
    assert rows_seen == sorted(set(rows_seen))
