"""Prequential evaluation: predict each instance, then let a detector decide
whether the forest should be rebuilt from the most recent samples.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .detectors import ADWIN, DDM, Phase
from .errors import FeatureWidthMismatch
from .features import FeatureMatrix, extract_features
from .forest import ForestConfig, ForestModel, train
from .metrics import derive, score
from .report import RunReport, segment_breakdown
from .scenarios import ShiftSpec, build_scenario, training_profile

MODES = ("Static", "AdaptiveDDM", "AdaptiveADWIN")
RETRAINED = "Retrained"
SKIPPED = "SkippedSingleClass"
# predictions are made this many rows ahead; a retrain discards the rest
_CHUNK = 1000


@dataclass(frozen=True)
class HarnessConfig:
    mode: str = "AdaptiveADWIN"
    retrain_window: int = 2000
    forest: ForestConfig = field(default_factory=ForestConfig)
    # keyword arguments passed to the detector constructor
    detector_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.retrain_window < 2:
            raise ValueError("retrain_window must be >= 2")

    def make_detector(self):
        if self.mode == "AdaptiveDDM":
            return DDM(**self.detector_params)
        if self.mode == "AdaptiveADWIN":
            return ADWIN(**self.detector_params)
        return None

    def to_dict(self) -> dict:
        det = self.make_detector()
        return {
            "mode": self.mode,
            "retrain_window": self.retrain_window,
            "forest": self.forest.to_dict(),
            "detector": det.params() if det is not None else None,
        }


@dataclass
class RunTrace:
    """Per-step bookkeeping that does not go into the JSON report."""

    detector_log: list = field(default_factory=list)   # (step, detector, phase)


def _retrain_seed(cfg: HarnessConfig, event_index: int) -> int:
    return cfg.forest.rng_seed + event_index + 1


def run_prequential(stream: FeatureMatrix, initial_model: ForestModel, cfg: HarnessConfig,
                    name: str = "stream", trace: RunTrace | None = None) -> RunReport:
    """Test-then-train over ``stream``.

    Instance ``i`` is predicted by a model fitted only on instances before
    ``i``. After its label is revealed the 0/1 error goes to the detector; on
    a DDM Drift or an ADWIN change the forest is refitted on the last
    ``retrain_window`` instances (``i`` included) if they hold both classes.
    The detector is reset either way.
    """
    X = np.asarray(stream.X, dtype=np.float64)
    y = np.asarray(stream.y, dtype=np.int8)
    if X.shape[1] != initial_model.n_features:
        raise FeatureWidthMismatch(
            f"stream has {X.shape[1]} features, model expects {initial_model.n_features}")
    trace = trace if trace is not None else RunTrace()
    n = y.size
    preds = np.empty(n, dtype=np.int8)
    versions = np.empty(n, dtype=np.int64)
    events = []
    model, version = initial_model, 0
    detector = cfg.make_detector()

    i = 0
    while i < n:
        stop = n if detector is None else min(n, i + _CHUNK)
        p = model.predict(X[i:stop])
        err = (p != y[i:stop]).astype(np.float64)
        hit = _scan(detector, err, i, trace)
        end = stop if hit < 0 else i + hit + 1
        preds[i:end] = p[: end - i]
        versions[i:end] = version
        if hit >= 0:
            step = i + hit
            lo = max(0, step + 1 - cfg.retrain_window)
            counts = np.bincount(y[lo:step + 1], minlength=2)
            event = {"step": int(step), "trigger": _trigger(detector),
                     "class_counts": [int(c) for c in counts]}
            if np.count_nonzero(counts) >= 2:
                model = train(X[lo:step + 1], y[lo:step + 1],
                              cfg.forest.with_seed(_retrain_seed(cfg, len(events))))
                version += 1
                event["action"] = RETRAINED
            else:
                event["action"] = SKIPPED
            event["model_version"] = version
            events.append(event)
            detector.reset()
        i = end

    cm = score(preds, y)
    segments = {} if stream.source is None else segment_breakdown(preds, y, stream.source)
    config = cfg.to_dict()
    config["stream_length"] = int(n)
    return RunReport(name=name, mode=cfg.mode, config=config, confusion=cm, metrics=derive(cm),
                     events=events, segments=segments, predictions=preds, truths=y.copy(),
                     model_versions=versions)


def _trigger(detector) -> str:
    return Phase.DRIFT.value if isinstance(detector, DDM) else "Change"


def _scan(detector, err, offset, trace) -> int:
    """Feed errors until the first retrain signal; returns its offset or -1."""
    if detector is None:
        return -1
    if isinstance(detector, ADWIN):
        hit = detector.update_until_change(err)
        if hit >= 0:
            trace.detector_log.append((offset + hit, detector.name, "Change"))
        return hit
    prev = detector.phase
    for j, e in enumerate(err):
        phase = detector.update(e)
        if phase is not prev:
            trace.detector_log.append((offset + j, detector.name, phase.value))
            prev = phase
        if phase is Phase.DRIFT:
            return j
    return -1


def detector_log_csv(log) -> str:
    buf = io.StringIO()
    buf.write("step,detector,phase\n")
    for step, det, phase in log:
        buf.write(f"{step},{det},{phase}\n")
    return buf.getvalue()


def plotdata_csv(stream: FeatureMatrix, report: RunReport) -> str:
    """Per-step memory, truth, prediction and model version for plotting."""
    buf = io.StringIO()
    buf.write("index,memory_used,label,prediction,model_version\n")
    for idx, mem, lab, pred, ver in zip(stream.index, stream.X[:, 0], report.truths,
                                        report.predictions, report.model_versions):
        buf.write(f"{idx},{mem!r},{lab},{pred},{ver}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class MatrixConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    retrain_window: int = 2000
    feature_window: int = 12
    total_samples: int = 20000
    rng_seed: int = 0
    ddm_params: dict = field(default_factory=dict)
    adwin_params: dict = field(default_factory=dict)

    def harness(self, mode: str) -> HarnessConfig:
        params = {"AdaptiveDDM": self.ddm_params, "AdaptiveADWIN": self.adwin_params}.get(mode, {})
        return HarnessConfig(mode, self.retrain_window, self.forest, dict(params))


def initial_model(cfg: MatrixConfig) -> ForestModel:
    """Forest fitted offline on a Low profile, before any stream is seen."""
    fm = extract_features(training_profile(cfg.total_samples, cfg.rng_seed), cfg.feature_window)
    return train(fm.X, fm.y, cfg.forest)


def scenario_stream(shift: ShiftSpec, cfg: MatrixConfig, profiles: dict | None = None):
    return extract_features(build_scenario(shift, profiles), cfg.feature_window)


def run_matrix(scenarios, modes=MODES, cfg: MatrixConfig | None = None,
               model: ForestModel | None = None, profiles: dict | None = None,
               traces: dict | None = None) -> list:
    """Every scenario under every mode, all starting from the same initial model.

    When ``traces`` is a dict it receives a :class:`RunTrace` per
    ``(scenario, mode)``.
    """
    cfg = cfg or MatrixConfig()
    model = model or initial_model(cfg)
    reports = []
    for shift in scenarios:
        stream = scenario_stream(shift, cfg, profiles)
        for mode in modes:
            trace = RunTrace()
            rep = run_prequential(stream, model, cfg.harness(mode), name=shift.name, trace=trace)
            if traces is not None:
                traces[(shift.name, mode)] = trace
            rep.config["scenario"] = shift.to_dict()
            reports.append(rep)
    return reports
