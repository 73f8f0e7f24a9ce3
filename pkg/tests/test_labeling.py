import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agewatch.decomposition import StlConfig
from agewatch.errors import SeriesShorterThanWindow, WindowTooShort
from agewatch.ingest import MemorySeries
from agewatch.labeling import (LabeledSeries, LabelingConfig, Provenance, consolidate,
                               label_by_trend, label_series, labeled_to_csv, ols_slope,
                               parse_labeled_csv, window_slopes)
from oracles import brute_force_labels, polyfit_slope


def test_ols_slope_of_line_and_constant():
    assert ols_slope(np.arange(10) * 2.5 + 1) == pytest.approx(2.5)
    assert ols_slope(np.full(7, 3.0)) == 0.0
    with pytest.raises(WindowTooShort):
        ols_slope([1.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=80))
def test_ols_slope_matches_polyfit(values):
    assert ols_slope(values) == pytest.approx(polyfit_slope(values), abs=1e-6)


def test_window_slopes_stride():
    y = np.r_[np.zeros(10), np.arange(10.0)]
    s = window_slopes(y, 5, stride=5)
    assert s.tolist() == pytest.approx([0.0, 0.0, 1.0, 1.0])
    with pytest.raises(SeriesShorterThanWindow):
        window_slopes(np.zeros(3), 5)


def test_label_by_trend_examples():
    cfg = LabelingConfig(window_size=10, slope_threshold=0.5)
    assert not label_by_trend(np.zeros(100), cfg).any()
    assert label_by_trend(np.arange(100.0), cfg).all()
    # a slope exactly at the threshold is not "above" it
    assert not label_by_trend(0.5 * np.arange(50.0), cfg).any()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 30), st.integers(1, 30))
def test_label_by_trend_matches_brute_force(seed, window, stride):
    stride = min(stride, window)
    rng = np.random.default_rng(seed)
    trend = np.cumsum(rng.normal(0.3, 1.0, 300))
    cfg = LabelingConfig(window_size=window, stride=stride, slope_threshold=0.5)
    assert np.array_equal(label_by_trend(trend, cfg),
                          brute_force_labels(trend, window, stride, 0.5))


def test_consolidate_prefixes_warmup_zeros():
    labels, prov = consolidate(np.array([1, 0, 1]), 2)
    assert labels.tolist() == [0, 0, 1, 0, 1]
    assert prov == (Provenance.WARMUP, Provenance.WARMUP, Provenance.TREND_WINDOW,
                    Provenance.DEFAULT, Provenance.TREND_WINDOW)


def test_labeled_series_rejects_aging_in_warmup():
    s = MemorySeries.regular([1.0, 2.0])
    with pytest.raises(ValueError):
        LabeledSeries(s, [1, 0], [Provenance.WARMUP, Provenance.DEFAULT])
    with pytest.raises(ValueError):
        LabeledSeries(s, [2, 0], [Provenance.DEFAULT] * 2)
    with pytest.raises(ValueError):
        LabeledSeries(s, [0], [Provenance.DEFAULT])


def _ramp_series(n=1000):
    t = np.arange(n)
    mem = 500 + np.where((t >= 300) & (t < 700), (t - 300) * 1.0, 0.0)
    mem = mem + np.where(t >= 700, 400.0, 0.0)
    return MemorySeries.regular(mem, 5.0)


def test_label_series_pipeline():
    r = label_series(_ramp_series(), LabelingConfig(), StlConfig(period=12))
    lab = r.labeled
    assert r.warmup_len == 120
    assert not lab.labels[:120].any()
    assert all(p is Provenance.WARMUP for p in lab.provenance[:120])
    assert lab.labels[350:650].all()
    assert not lab.labels[150:250].any()
    assert not lab.labels[760:].any()


def test_zero_warmup_keeps_every_sample_in_the_body():
    r = label_series(_ramp_series(), LabelingConfig(warmup_seconds=0), StlConfig(period=12))
    assert r.warmup_len == 0
    assert Provenance.WARMUP not in r.labeled.provenance


def test_labeled_csv_round_trip():
    r = label_series(_ramp_series(), LabelingConfig(), StlConfig(period=12))
    text = labeled_to_csv(r.labeled)
    assert text.splitlines()[0] == "elapsed_seconds,memory_used,label,provenance"
    back = parse_labeled_csv(text)
    assert np.array_equal(back.labels, r.labeled.labels)
    assert back.provenance == r.labeled.provenance
    assert labeled_to_csv(back) == text
