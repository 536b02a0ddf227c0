"""Load OpenCelliD-format CSV snapshots into validated tower records.

Rows that fail validation are quarantined with a reason code instead of
aborting the load; only an unreadable source or a missing header column is
fatal.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TextIO

from celltriage.errors import InputError

FIELDS = ("radio", "mcc", "net", "area", "cell", "lon", "lat", "range", "samples", "created", "updated")

# logical field -> CSV header; identity for the public OpenCelliD dump
DEFAULT_SCHEMA: dict[str, str] = {name: name for name in FIELDS}

SECONDS_PER_DAY = 86400


class Radio(str, Enum):
    GSM = "GSM"
    UMTS = "UMTS"
    LTE = "LTE"


class Reason(str, Enum):
    """Quarantine reason codes, listed in validation check order."""

    PARSE_FAILURE = "ParseFailure"
    BAD_RADIO = "BadRadio"
    BAD_COORDINATE = "BadCoordinate"
    NON_POSITIVE_RANGE = "NonPositiveRange"
    NEGATIVE_SAMPLES = "NegativeSamples"
    TIMESTAMP_ORDER = "TimestampOrder"


@dataclass(frozen=True)
class TowerRecord:
    radio: Radio
    mcc: int
    net: int
    area: int
    cell: int
    lat: float
    lon: float
    range_m: int
    samples: int
    created_ts: int
    updated_ts: int


@dataclass
class ValidationReport:
    accepted_count: int = 0
    quarantined: list[tuple[int, Reason]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.accepted_count + len(self.quarantined)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"row": row, "reason": reason.value}) + "\n" for row, reason in self.quarantined
        )

    def to_dict(self) -> dict:
        counts = {r.value: 0 for r in Reason}
        for _, reason in self.quarantined:
            counts[reason.value] += 1
        return {
            "accepted_count": self.accepted_count,
            "quarantined_count": len(self.quarantined),
            "total_rows": self.total,
            "reason_counts": counts,
            "quarantined": [{"row": row, "reason": reason.value} for row, reason in self.quarantined],
        }


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    value = float(text.strip())
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def validate_record(raw: Mapping[str, str | None]) -> TowerRecord | Reason:
    """Validate one row keyed by logical field name.

    Returns the record, or the first failing reason code.
    """
    try:
        radio_text = raw["radio"]
        if radio_text is None:
            return Reason.PARSE_FAILURE
        mcc = _parse_int(raw["mcc"])
        net = _parse_int(raw["net"])
        area = _parse_int(raw["area"])
        cell = _parse_int(raw["cell"])
        lat = _parse_float(raw["lat"])
        lon = _parse_float(raw["lon"])
        range_m = _parse_int(raw["range"])
        samples = _parse_int(raw["samples"])
        created = _parse_int(raw["created"])
        updated = _parse_int(raw["updated"])
    except (KeyError, TypeError, ValueError, AttributeError):
        return Reason.PARSE_FAILURE

    try:
        radio = Radio(radio_text.strip().upper())
    except ValueError:
        return Reason.BAD_RADIO
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        return Reason.BAD_COORDINATE
    if range_m <= 0:
        return Reason.NON_POSITIVE_RANGE
    if samples < 0:
        return Reason.NEGATIVE_SAMPLES
    if updated < created:
        return Reason.TIMESTAMP_ORDER
    return TowerRecord(
        radio=radio,
        mcc=mcc,
        net=net,
        area=area,
        cell=cell,
        lat=lat,
        lon=lon,
        range_m=range_m,
        samples=samples,
        created_ts=created,
        updated_ts=updated,
    )


def parse_dataset(
    source: TextIO | str, schema: Mapping[str, str] | None = None
) -> tuple[list[TowerRecord], ValidationReport]:
    """Parse a CSV table with a header row.

    ``source`` is an open text stream or the CSV text itself. ``schema`` maps
    logical field names to column headers; unmapped fields fall back to the
    OpenCelliD header names. Row numbers in the report are 1-based and count
    data rows only; blank lines are not rows.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        mapping.update(schema)
    stream = io.StringIO(source) if isinstance(source, str) else source

    try:
        reader = csv.reader(stream)
        header = next(reader, None)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise InputError(f"cannot read source: {exc}") from exc
    if header is None:
        raise InputError("source is empty; a header row is required")
    header = [h.strip().lstrip("﻿") for h in header]
    missing = [col for col in mapping.values() if col not in header]
    if missing:
        raise InputError(f"missing mandatory column(s): {', '.join(missing)}")
    index = {name: header.index(col) for name, col in mapping.items()}

    records: list[TowerRecord] = []
    report = ValidationReport()
    row_no = 0
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error:
            row_no += 1
            report.quarantined.append((row_no, Reason.PARSE_FAILURE))
            continue
        except (OSError, UnicodeDecodeError) as exc:
            raise InputError(f"cannot read source: {exc}") from exc
        if not row or all(not cell.strip() for cell in row):
            continue
        row_no += 1
        if len(row) != len(header):
            report.quarantined.append((row_no, Reason.PARSE_FAILURE))
            continue
        result = validate_record({name: row[i] for name, i in index.items()})
        if isinstance(result, Reason):
            report.quarantined.append((row_no, result))
        else:
            records.append(result)
            report.accepted_count += 1
    return records, report


def load_csv(path: str | Path, schema: Mapping[str, str] | None = None) -> tuple[list[TowerRecord], ValidationReport]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_dataset(fh, schema)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not valid UTF-8: {exc}") from exc


def write_records(records: Iterable[TowerRecord], sink: TextIO, schema: Mapping[str, str] | None = None) -> None:
    """Write records as CSV that :func:`parse_dataset` reads back unchanged."""
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        mapping.update(schema)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow([mapping[name] for name in FIELDS])
    for r in records:
        writer.writerow(
            [
                r.radio.value,
                r.mcc,
                r.net,
                r.area,
                r.cell,
                repr(r.lon),
                repr(r.lat),
                r.range_m,
                r.samples,
                r.created_ts,
                r.updated_ts,
            ]
        )
