import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agewatch.detectors import ADWIN, DDM, Phase
from agewatch.errors import ValueOutOfRange
from oracles import histogram_level_counts


def _ddm_run(det, errors):
    return [det.update(e) for e in errors]


def test_ddm_error_free_stream_stays_in_control():
    det = DDM()
    assert set(_ddm_run(det, np.zeros(5000))) == {Phase.IN_CONTROL}
    assert det.p_min == 0.0 and det.s_min == 0.0


def test_ddm_guard_before_min_instances():
    det = DDM(min_num_instances=30)
    assert set(_ddm_run(det, np.ones(29))) == {Phase.IN_CONTROL}


def test_ddm_warning_precedes_drift():
    det = DDM()
    rng = np.random.default_rng(0)
    phases = _ddm_run(det, np.r_[rng.random(1000) < 0.05, np.ones(200)])
    first_drift = phases.index(Phase.DRIFT)
    assert Phase.WARNING in phases[:first_drift]


def test_ddm_minimum_is_joint():
    det = DDM(min_num_instances=2)
    for e in [1, 0, 0, 0, 1, 0]:
        det.update(e)
        if det.n < 2:
            continue
        assert det.p_min + det.s_min <= det.p + det.s + 1e-15


def test_ddm_reset():
    det = DDM()
    _ddm_run(det, np.r_[np.zeros(100), np.ones(50)])
    det.reset()
    assert (det.n, det.p_min, det.phase) == (0, np.inf, Phase.IN_CONTROL)
    det.reset()
    assert det.n == 0
    assert set(_ddm_run(det, np.zeros(100))) == {Phase.IN_CONTROL}
    # the next minimum comes from the new data
    det.reset()
    _ddm_run(det, np.r_[np.ones(40), np.zeros(1)])
    assert det.p_min > 0.9


def test_adwin_constant_stream_is_silent():
    det = ADWIN()
    assert det.detections(np.zeros(10_000)).size == 0
    assert det.width == 10_000


def test_adwin_step_stream():
    det = ADWIN(delta=0.002)
    hits = det.detections(np.r_[np.zeros(1000), np.ones(1000)])
    assert hits.size > 0 and hits[0] >= 1000
    assert abs(det.mean - 1.0) <= 0.05
    assert det.width < 1100


@pytest.mark.parametrize("k", range(1, 13))
def test_adwin_histogram_levels(k):
    det = ADWIN()
    assert det.detections(np.full(2 ** k, 0.5)).size == 0
    assert det.level_counts() == histogram_level_counts(2 ** k, det.max_buckets)


def test_adwin_bucket_invariants():
    det = ADWIN()
    det.detections(np.random.default_rng(1).random(3000) * 0.2)
    b = det.buckets()
    sizes = [s for s, _, _ in b]
    assert sizes == sorted(sizes, reverse=True)
    assert all(s & (s - 1) == 0 for s in sizes)
    assert max(det.level_counts()) <= det.max_buckets
    assert sum(sizes) == det.width
    assert sum(x for _, x, _ in b) == pytest.approx(det.total, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_adwin_totals_track_the_retained_suffix(seed):
    rng = np.random.default_rng(seed)
    stream = np.r_[rng.random(3000) < 0.2, rng.random(3000) < 0.7].astype(np.float64)
    det = ADWIN()
    for i, v in enumerate(stream):
        det.update(v)
        if i % 97 == 0 or det.change_detected:
            tail = stream[i + 1 - det.width:i + 1]
            assert det.mean == pytest.approx(tail.mean(), abs=1e-9)
            assert det.variance == pytest.approx(tail.var(), abs=1e-9)


def test_adwin_update_paths_agree():
    stream = (np.random.default_rng(2).random(4000) < np.r_[np.full(2000, 0.1),
                                                           np.full(2000, 0.6)]).astype(float)
    a, b = ADWIN(), ADWIN()
    flags = [i for i, v in enumerate(stream) if a.update(v)]
    assert flags == b.detections(stream).tolist()
    c = ADWIN()
    assert c.update_until_change(stream) == flags[0]


def test_adwin_rejects_out_of_range():
    with pytest.raises(ValueOutOfRange):
        ADWIN().update(1.5)
    with pytest.raises(ValueOutOfRange):
        ADWIN().detections([0.2, -0.1])


def test_adwin_reset():
    det = ADWIN()
    det.detections(np.r_[np.zeros(500), np.ones(500)])
    det.reset()
    assert (det.width, det.total, det.level_counts()) == (0, 0.0, [])
    det.reset()
    assert det.width == 0
    assert det.detections(np.full(2000, 0.4)).size == 0


def test_detectors_are_deterministic():
    stream = (np.random.default_rng(5).random(5000) < 0.3).astype(float)
    assert np.array_equal(ADWIN().detections(stream), ADWIN().detections(stream))
    assert _ddm_run(DDM(), stream) == _ddm_run(DDM(), stream)
