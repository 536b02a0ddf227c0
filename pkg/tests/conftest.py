from __future__ import annotations

import random
from pathlib import Path

import pytest

from celltriage.ingest import Radio, TowerRecord
from celltriage.metrics import EnrichedTower, enrich

DATA = Path(__file__).parent / "data"
BASE_TS = 1_700_000_000


def make_record(
    samples: int = 10,
    range_m: int = 1000,
    active_days: int = 100,
    radio: Radio = Radio.LTE,
    cell: int = 1,
    area: int = 1,
    lat: float = 24.86,
    lon: float = 67.0,
    updated_ts: int | None = None,
) -> TowerRecord:
    updated = BASE_TS + 400 * 86400 if updated_ts is None else updated_ts
    return TowerRecord(
        radio=radio, mcc=410, net=1, area=area, cell=cell, lat=lat, lon=lon,
        range_m=range_m, samples=samples, created_ts=updated - active_days * 86400, updated_ts=updated,
    )


def make_tower(samples: int = 10, range_m: int = 1000, active_days: int = 100, **kw) -> EnrichedTower:
    return enrich([make_record(samples, range_m, active_days, **kw)])[0]


def random_records(rng: random.Random, n: int) -> list[TowerRecord]:
    out = []
    for i in range(n):
        updated = BASE_TS + rng.randint(0, 500 * 86400)
        out.append(
            TowerRecord(
                radio=rng.choice(list(Radio)),
                mcc=410,
                net=rng.choice([1, 3, 4, 6]),
                area=rng.randint(1, 12),
                cell=10_000 + i,
                lat=rng.uniform(24.0, 36.0),
                lon=rng.uniform(61.0, 75.0),
                range_m=rng.randint(1, 6000),
                samples=rng.choice([0, 1, rng.randint(0, 30), rng.randint(0, 400)]),
                created_ts=updated - rng.randint(0, 700 * 86400),
                updated_ts=updated,
            )
        )
    return out


@pytest.fixture
def fixture_csv() -> Path:
    return DATA / "fixture.csv"


@pytest.fixture
def gazetteer_csv() -> Path:
    return DATA / "gazetteer.csv"
