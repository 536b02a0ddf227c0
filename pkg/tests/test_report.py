import json
import math
import random
import statistics

import pytest

from celltriage.errors import ConsistencyError
from celltriage.ingest import Radio, ValidationReport
from celltriage.pipeline import Analysis, RunConfig
from celltriage.report import build_report, canonical, dumps, emit_figure_data, five_number, rows_to_csv
from celltriage.spatial import load_gazetteer
from celltriage.ingest import load_csv

from conftest import make_record, random_records

FIVE = [
    make_record(samples=60, range_m=500, radio=Radio.LTE, cell=1),
    make_record(samples=10, range_m=100, radio=Radio.LTE, cell=2),
    make_record(samples=1, range_m=2000, active_days=400, radio=Radio.GSM, cell=3),
    make_record(samples=1, range_m=2000, radio=Radio.UMTS, cell=4),
    make_record(samples=10, range_m=1000, radio=Radio.LTE, cell=5),
]
T_FIVE = {"high_samples": 50, "low_samples": 2, "high_density": 0.05, "low_density": 0.001, "long_active": 300}


def analysis_of(records, **cfg):
    return Analysis(records, ValidationReport(accepted_count=len(records)), RunConfig(**cfg))


def test_canonical_rounding_and_nan():
    assert canonical(1 / 3) == 0.333333
    assert canonical(123456789.0) == 123457000.0
    assert canonical({"a": (1, float("nan"))}) == {"a": [1, None]}
    assert canonical(True) is True
    with pytest.raises(TypeError):
        canonical(object())


def test_dumps_is_sorted_and_stable():
    text = dumps({"b": 1, "a": [0.1 + 0.2]})
    assert text == '{\n  "a": [\n    0.3\n  ],\n  "b": 1\n}\n'


def test_rows_to_csv():
    assert rows_to_csv([]) == ""
    assert rows_to_csv([{"x": 1, "y": None}, {"x": 2.5, "y": "z"}]) == "x,y\n1,\n2.5,z\n"


def test_figure_6_five_tower_fixture():
    rep = analysis_of(FIVE, threshold_overrides=T_FIVE, k=2).report(("thresholds", "classification"))
    rows = emit_figure_data(rep, 6)
    assert [r["count"] for r in rows] == [1, 1, 1, 1, 1]
    assert all(r["percentage"] == 20.0 for r in rows)


def test_figure_2_five_numbers():
    assert five_number([1, 2, 3, 4, 5]) == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}
    recs = [make_record(samples=s, range_m=100 * s, radio=Radio.GSM, cell=s) for s in range(1, 6)]
    rep = analysis_of(recs, k=1).report(("thresholds", "classification"))
    rows = emit_figure_data(rep, 2)
    assert [(r["radio"], r["metric"]) for r in rows] == [("GSM", "range_m"), ("GSM", "samples")]
    assert rows[1]["median"] == 3.0 and rows[0]["q3"] == 400.0


def test_figure_5_matches_recomputation():
    recs = random_records(random.Random(50), 400)
    rep = analysis_of(recs, k=5).report(("thresholds", "classification"))
    for row in emit_figure_data(rep, 5):
        s = [t.samples for t, lab in zip(rep.towers, rep.labels) if lab.value == row["label"]]
        assert row["n"] == len(s)
        if len(s) >= 2:
            assert row["mean_samples"] == pytest.approx(sum(s) / len(s), rel=1e-12)
            mean = sum(s) / len(s)
            sd = math.sqrt(sum((x - mean) ** 2 for x in s) / (len(s) - 1))
            assert row["sd_samples"] == pytest.approx(sd, rel=1e-12)


def test_figure_3_and_unknown_figure():
    rep = analysis_of(FIVE, threshold_overrides=T_FIVE, k=2).report(("thresholds", "classification"))
    pts = emit_figure_data(rep, 3)
    assert len(pts) == 5 and pts[0]["signal_density"] == 60 / 500
    with pytest.raises(ValueError):
        emit_figure_data(rep, 7)


def test_build_report_rejects_mismatched_stages():
    a = analysis_of(FIVE, threshold_overrides=T_FIVE, k=2)
    labeled, summary = a.classification
    with pytest.raises(ConsistencyError):
        build_report(
            config={}, records=FIVE[:4], validation=ValidationReport(accepted_count=4),
            thresholds=a.thresholds, towers=a.towers, labels=a.labels, summary=summary,
            sections=("classification",),
        )
    with pytest.raises(ConsistencyError):
        build_report(config={}, records=FIVE, validation=ValidationReport(accepted_count=5), sections=("baseline",))
    with pytest.raises(ConsistencyError):
        build_report(config={}, records=FIVE, validation=ValidationReport(accepted_count=4), sections=("dataset",))


def test_build_report_rejects_foreign_towers():
    a = analysis_of(FIVE, threshold_overrides=T_FIVE, k=2)
    b = analysis_of(list(reversed(FIVE)), threshold_overrides=T_FIVE, k=2)
    with pytest.raises(ConsistencyError):
        build_report(
            config={}, records=FIVE, validation=a.validation, thresholds=a.thresholds,
            towers=b.towers, labels=b.labels, summary=b.classification[1], sections=("classification",),
        )


def test_full_report_is_deterministic(fixture_csv, gazetteer_csv):
    def once():
        records, validation = load_csv(fixture_csv)
        cfg = RunConfig(input_path=str(fixture_csv), gazetteer_path=str(gazetteer_csv), seed=3)
        return Analysis(records, validation, cfg, load_gazetteer(gazetteer_csv)).report().to_json()

    first = once()
    assert first == once()
    doc = json.loads(first)
    assert list(doc) == sorted(doc)
    assert doc["classification"]["summary"]["total"] == doc["dataset"]["accepted"] == 200


def test_cluster_sections_conserve_towers(fixture_csv, gazetteer_csv):
    records, validation = load_csv(fixture_csv)
    a = Analysis(records, validation, RunConfig(gazetteer_path=str(gazetteer_csv)), load_gazetteer(gazetteer_csv))
    doc = a.report(("clusters",)).to_dict()["clusters"]
    assert sum(p["member_count"] for p in doc["profiles"]) == 200
    assert sum(p["total_samples"] for p in doc["profiles"]) == sum(r.samples for r in records)
    assert statistics.fmean(p["member_count"] for p in doc["profiles"]) == 10
