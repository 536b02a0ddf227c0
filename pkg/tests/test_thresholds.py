import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from celltriage.errors import DomainError
from celltriage.metrics import enrich
from celltriage.thresholds import QuantileConfig, ThresholdSet, compute_thresholds, quantile

from conftest import make_tower, random_records
from oracles import quantile_oracle


def test_quantile_examples():
    assert quantile([1, 2, 3, 4, 5], 0.5) == 3.0
    assert quantile([1, 2, 3, 4, 5], 0.0) == 1.0
    # h = 3 * 0.9 = 2.7 -> 3 + 0.7 * (4 - 3)
    assert quantile([1, 2, 3, 4], 0.9) == 3.7
    assert quantile([4, 1, 3, 2], 0.9) == pytest.approx(float(np.quantile([1, 2, 3, 4], 0.9)), abs=1e-15)


def test_quantile_errors():
    with pytest.raises(DomainError):
        quantile([], 0.5)
    with pytest.raises(DomainError):
        quantile([1.0], 1.5)
    with pytest.raises(DomainError):
        quantile([1.0], -0.1)


def test_single_tower_thresholds_equal_its_metrics():
    t = make_tower(samples=12, range_m=300, active_days=40)
    T = compute_thresholds([t])
    assert T == ThresholdSet(12, 12, t.signal_density, t.signal_density, 40)


def test_samples_zero_to_ten_defaults():
    towers = [make_tower(samples=s, range_m=100) for s in range(11)]
    T = compute_thresholds(towers, QuantileConfig())
    assert T.high_samples == 9.0 and T.low_samples == 1.0


def test_thresholds_match_oracle_on_random_towers():
    towers = enrich(random_records(random.Random(5), 1000))
    cfg = QuantileConfig(0.9, 0.1, 0.75)
    T = compute_thresholds(towers, cfg)
    s = [t.samples for t in towers]
    d = [t.signal_density for t in towers]
    a = [t.active_days for t in towers]
    for got, want in [
        (T.high_samples, quantile_oracle(s, 0.9)),
        (T.low_samples, quantile_oracle(s, 0.1)),
        (T.high_density, quantile_oracle(d, 0.9)),
        (T.low_density, quantile_oracle(d, 0.1)),
        (T.long_active, quantile_oracle(a, 0.75)),
    ]:
        assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12)


def test_empty_towers_rejected():
    with pytest.raises(DomainError):
        compute_thresholds([])


def test_config_validation():
    with pytest.raises(DomainError):
        QuantileConfig(q_high=0.3, q_low=0.5)
    with pytest.raises(DomainError):
        QuantileConfig(q_high=0.0)


values = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)
probs = st.floats(0.0, 1.0)


@given(values, probs, probs)
def test_monotone_in_q(xs, q1, q2):
    lo, hi = sorted((q1, q2))
    assert quantile(xs, lo) <= quantile(xs, hi)


@given(values, probs)
def test_within_range(xs, q):
    assert min(xs) <= quantile(xs, q) <= max(xs)


@given(values, probs, st.randoms())
def test_permutation_invariant(xs, q, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert quantile(ys, q) == quantile(xs, q)


@given(values, st.floats(0.5, 1.0))
def test_duplicate_max_never_decreases_high(xs, q):
    assert quantile(xs + [max(xs)], q) >= quantile(xs, q)
