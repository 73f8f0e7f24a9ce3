"""Acceptance criteria 1-8, one pass/fail line each.

Every check is computed from scratch here; the verdict line is printed (and
collected for the terminal summary) before the assertion runs, so a failing
criterion still reports its measured numbers.
"""

import json
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from agewatch.cli import main
from agewatch.decomposition import StlConfig, stl_decompose
from agewatch.detectors import ADWIN, DDM, Phase
from agewatch.features import extract_features
from agewatch.forest import ForestConfig, kfold_evaluate
from agewatch.harness import MODES, MatrixConfig, initial_model, run_matrix
from agewatch.ingest import load_csv, remove_warmup, series_to_csv
from agewatch.labeling import LabelingConfig, label_by_trend, label_series
from agewatch.metrics import ConfusionMatrix, derive
from agewatch.scenarios import (ProfileSpec, default_scenarios, generate_profile, preset,
                                training_profile)
from oracles import adwin_exact_drop, brute_force_labels, derive_exact

VERDICTS = {}


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[n] = line
    print(line)
    return ok


# ---------------------------------------------------------------- criterion 1

def _ddm_drifts(errors):
    det, out = DDM(), []
    for i, e in enumerate(errors):
        if det.update(e) is Phase.DRIFT:
            out.append(i)
            det.reset()
    return out


def test_criterion_1_detectors():
    t0 = time.perf_counter()
    detected = quiet = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        err = np.r_[rng.random(1000) < 0.1, rng.random(1000) < 0.5].astype(np.float64)
        drifts = _ddm_drifts(err)
        detected += any(1000 <= s < 1500 for s in drifts)
        quiet += not any(s < 1000 for s in drifts)

    step = ADWIN(delta=0.002)
    hits = step.detections(np.r_[np.zeros(1000), np.ones(1000)])
    step_ok = hits.size > 0 and abs(step.mean - 1.0) <= 0.05

    false_runs = 0
    for seed in range(200):
        x = (np.random.default_rng(10_000 + seed).random(10_000) < 0.3).astype(np.float64)
        false_runs += ADWIN(delta=0.002).detections(x).size > 0
    elapsed = time.perf_counter() - t0

    ok = detected >= 95 and quiet >= 95 and step_ok and false_runs <= 10 and elapsed < 30
    verdict(1, ok, f"DDM detected {detected}/100, no early alarm {quiet}/100; "
                   f"ADWIN step mean {step.mean:.3f} after {hits.size} cut(s), "
                   f"false-alarm runs {false_runs}/200; {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- criterion 2

def _bounded_stream(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2000, 5001))
    k = int(rng.integers(1, 4))
    cuts = np.sort(rng.choice(np.arange(200, n - 200), size=k, replace=False))
    means = rng.uniform(0.05, 0.95, cuts.size + 1)
    mu = means[np.searchsorted(cuts, np.arange(n), side="right")]
    if seed % 2:
        return (rng.random(n) < mu).astype(np.float64)
    return np.clip(mu + rng.normal(0, 0.15, n), 0.0, 1.0)


def test_criterion_2_adwin_oracle():
    checked = within = both = mean_bad = 0
    worst = 0
    for seed in range(50):
        x = _bounded_stream(seed)
        det = ADWIN(delta=0.002)
        for i, v in enumerate(x):
            before = det.width
            if not det.update(v):
                continue
            # the oracle shrinks the same pre-update window exactly
            w, fired = adwin_exact_drop(x[i - before:i + 1], 0.002)
            checked += 1
            gap = abs(len(w) - det.width)
            worst = max(worst, gap)
            within += gap <= det.last_dropped_size
            if fired:
                # both dropped: the bucketed mean must be the exact mean of what it kept
                both += 1
                kept = x[i + 1 - det.width:i + 1]
                mean_bad += abs(det.mean - float(np.mean(kept))) > 1e-9
    ok = checked > 0 and within == checked and mean_bad == 0
    verdict(2, ok, f"{within}/{checked} detections within one bucket of the exact window "
                   f"(worst gap {worst}); exact-oracle also dropped on {both}; means agree on "
                   f"{both - mean_bad}/{both}")
    assert ok


# ---------------------------------------------------------------- criterion 3

def _sawtooth(leak, episode):
    return ProfileSpec("saw", base_memory=1000.0, leak_rate=leak, episode_length=episode,
                       quiet_length=episode, seasonal_amplitude=0.0, noise_std=0.0,
                       total_samples=10_000, seasonal_period=12)


def test_criterion_3_labeling():
    identical = 0
    for seed in range(20):
        name = ("Low", "Medium", "High")[seed % 3]
        n = 4000 + 300 * seed
        spec = preset(name, total_samples=n, rng_seed=seed)
        s = generate_profile(spec)
        _, body = remove_warmup(s.series, 600)
        trend = stl_decompose(body.memory_used, period=spec.seasonal_period).trend
        cfg = LabelingConfig(window_size=60, stride=1 + seed % 5)
        identical += np.array_equal(label_by_trend(trend, cfg),
                                    brute_force_labels(trend, 60, cfg.stride, 0.5))
    agreement = []
    for leak in (0.6, 1.0, 1.5):
        s = generate_profile(_sawtooth(leak, 2000))
        r = label_series(s.series, LabelingConfig(), StlConfig(period=12))
        agreement.append(float(np.mean(r.labeled.labels == s.labels)))
    ok = identical == 20 and min(agreement) >= 0.99
    verdict(3, ok, f"bit-identical {identical}/20; sawtooth agreement "
                   + ", ".join(f"{a:.4f}" for a in agreement))
    assert ok


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_stl():
    rng = np.random.default_rng(0)
    t = np.arange(20_000)
    y = 4000 + 0.1 * t + 5 * np.sin(2 * np.pi * t / 720) + rng.normal(0, 1, t.size)
    t0 = time.perf_counter()
    d = stl_decompose(y, period=720)
    elapsed = time.perf_counter() - t0
    identity = np.array_equal(d.trend + d.seasonal + d.residual, y)

    line = 100.0 + 0.5 * np.arange(240)
    dl = stl_decompose(line, period=12)
    line_err = float(np.max(np.abs(dl.trend - line)[12:-12]))

    ts = np.arange(720)
    ds = stl_decompose(10.0 + np.sin(2 * np.pi * ts / 24), period=24)
    amp = float((ds.seasonal[48:-48].max() - ds.seasonal[48:-48].min()) / 2)

    ok = identity and line_err <= 1e-3 and abs(amp - 1.0) <= 0.05 and elapsed < 10
    verdict(4, ok, f"identity exact {identity}; line trend error {line_err:.2e}; "
                   f"sine amplitude {amp:.4f}; 20k samples in {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- criterion 5

def test_criterion_5_headline():
    cfg = MatrixConfig(rng_seed=0)
    t0 = time.perf_counter()
    model = initial_model(cfg)
    reports = run_matrix(default_scenarios(cfg.total_samples, cfg.rng_seed), MODES, cfg, model)
    elapsed = time.perf_counter() - t0
    f1 = {(r.name, r.mode): r.f1 for r in reports}
    names = [r.name for r in reports if r.mode == "Static"]
    recurring = next(n for n in names if n.startswith("recurring"))

    fm = extract_features(training_profile(cfg.total_samples, cfg.rng_seed), cfg.feature_window)
    in_dist = kfold_evaluate(fm.X, fm.y, cfg.forest, k=5).f1
    pooled = sum((r.confusion for r in reports if r.mode == "Static"), ConfusionMatrix(0, 0, 0, 0))
    static_pooled = derive(pooled).f1

    a = static_pooled <= in_dist - 0.10
    b = all(f1[(n, "AdaptiveADWIN")] >= max(0.90, f1[(n, "Static")] + 0.05) for n in names)
    c = f1[(recurring, "AdaptiveADWIN")] >= f1[(recurring, "AdaptiveDDM")]
    d = min(names, key=lambda n: f1[(n, "Static")]) == recurring
    table = "; ".join(f"{n}: S {f1[(n, 'Static')]:.4f} D {f1[(n, 'AdaptiveDDM')]:.4f} "
                      f"A {f1[(n, 'AdaptiveADWIN')]:.4f}" for n in names)
    ok = a and b and c and d and elapsed < 300
    verdict(5, ok, f"(a) {a} in-dist {in_dist:.4f} vs static pooled {static_pooled:.4f}; "
                   f"(b) {b}; (c) {c}; (d) {d}; matrix {elapsed:.0f}s; {table}")
    assert ok


# ---------------------------------------------------------------- criterion 6

DATASET_ENV = "AGEWATCH_DATASET"


def test_criterion_6_external_dataset():
    path = os.environ.get(DATASET_ENV)
    if not path or not Path(path).exists():
        VERDICTS[6] = (f"criterion 6: SKIPPED  no dataset supplied "
                       f"(set {DATASET_ENV} to a Low-workload CSV)")
        print(VERDICTS[6])
        pytest.skip("external dataset not supplied")
    period = int(os.environ.get("AGEWATCH_DATASET_PERIOD", "720"))
    r = label_series(load_csv(path, "Low"), LabelingConfig(), StlConfig(period=period))
    fm = extract_features(r.labeled)
    f1 = kfold_evaluate(fm.X, fm.y, ForestConfig(), k=5).f1
    ok = f1 >= 0.99
    verdict(6, ok, f"Low-workload k-fold F1 {f1:.4f} (period {period})")
    assert ok


# ---------------------------------------------------------------- criterion 7

def test_criterion_7_metrics():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        tp, fp, tn, fn = (int(v) for v in rng.integers(0, 1000, 4))
        m = derive(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn))
        got = (m.accuracy, m.precision, m.recall, m.f1)
        worst = max(worst, max(abs(g - e) for g, e in zip(got, derive_exact(tp, fp, tn, fn))))
    # the worked example, by hand
    m = derive(ConfusionMatrix(tp=2, fp=1, tn=0, fn=1))
    hand = (m.accuracy, m.precision, m.recall, m.f1) == (0.5, 2 / 3, 2 / 3, float(Fraction(2, 3)))
    ok = worst <= 1e-12 and hand
    verdict(7, ok, f"max deviation from exact rationals {worst:.1e} over 20 matrices")
    assert ok


# ---------------------------------------------------------------- criterion 8

SCENARIO_INI = """\
[scenario]
name = det
kind = recurring
a = Medium
b = High
total_samples = 4000
block_length = 1000
cycles = 2
"""


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.suffix != ".ini"}


def test_criterion_8_determinism(tmp_path):
    mem = generate_profile(preset("High", total_samples=3000, rng_seed=5))
    (tmp_path / "memory.csv").write_text(series_to_csv(mem.series))
    (tmp_path / "det.ini").write_text(SCENARIO_INI)
    p = str(tmp_path)
    commands = [
        ["label", f"{p}/memory.csv", "--out", f"{p}/labeled.csv", "--period", "48"],
        ["train", f"{p}/labeled.csv", "--model", f"{p}/model.json", "--n-trees", "10",
         "--seed", "3"],
        ["simulate", f"{p}/det.ini", "--out", f"{p}/det.csv", "--seed", "3"],
        *[["run", f"{p}/det.csv", "--model", f"{p}/model.json", "--mode", mode,
           "--out-dir", f"{p}/runs", "--n-trees", "10", "--svg", "--seed", "3"]
          for mode in MODES],
        ["matrix", "--out-dir", f"{p}/matrix", "--samples", "3000", "--n-trees", "5",
         "--seed", "3"],
        ["report", f"{p}/runs/det_Static.json", f"{p}/runs/det_AdaptiveDDM.json",
         f"{p}/runs/det_AdaptiveADWIN.json", "--out", f"{p}/table.csv"],
    ]
    first_codes = [main(c) for c in commands]
    first = _snapshot(tmp_path)
    second_codes = [main(c) for c in commands]
    second = _snapshot(tmp_path)
    differ = sorted(k for k in first if first[k] != second.get(k))
    ok = first_codes == second_codes == [0] * len(commands) and not differ and len(first) > 20
    verdict(8, ok, f"{len(first)} output files from {len(commands)} commands, "
                   f"{len(differ)} differ on rerun" + (f": {differ[:3]}" if differ else ""))
    assert ok
