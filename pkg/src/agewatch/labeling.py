"""Trend-slope labeling: Normal (0) / Aging (1) per sample."""

from __future__ import annotations

import csv
import enum
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .decomposition import StlConfig, stl_decompose
from .errors import MissingColumn, SeriesShorterThanWindow, ValueOutOfRange, WindowTooShort
from .ingest import MemorySeries, parse_csv, remove_warmup, series_to_csv


class Provenance(str, enum.Enum):
    WARMUP = "Warmup"
    TREND_WINDOW = "TrendWindow"
    DEFAULT = "Default"
    # synthetic ground truth, known by construction
    CONSTRUCTION = "Construction"


@dataclass(frozen=True)
class LabelingConfig:
    window_size: int = 60
    stride: int = 1
    slope_threshold: float = 0.5
    warmup_seconds: float = 600.0

    def __post_init__(self):
        if self.window_size < 2:
            raise WindowTooShort(f"window_size {self.window_size} < 2")
        if not 1 <= self.stride <= self.window_size:
            raise ValueError("stride must be in [1, window_size]")
        if self.slope_threshold <= 0:
            raise ValueError("slope_threshold must be positive")
        if self.warmup_seconds < 0:
            raise ValueError("warmup_seconds must be non-negative")


@dataclass(frozen=True)
class LabeledSeries:
    """A memory series with one 0/1 label per sample.

    ``source`` records which workload profile produced each sample; it is only
    populated for synthesized and composed streams.
    """

    series: MemorySeries
    labels: np.ndarray = field(repr=False)
    provenance: tuple = field(repr=False)
    source: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", tuple(Provenance(p) for p in self.provenance))
        if self.source is not None:
            object.__setattr__(self, "source", tuple(self.source))
        n = len(self.series)
        if labels.size != n or len(self.provenance) != n:
            raise ValueError("labels/provenance length differs from series")
        if self.source is not None and len(self.source) != n:
            raise ValueError("source length differs from series")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0/1")
        warm = np.array([p is Provenance.WARMUP for p in self.provenance], dtype=bool)
        if np.any(labels[warm] != 0):
            raise ValueError("warm-up samples must be labeled 0")

    def __len__(self) -> int:
        return len(self.series)

    @property
    def memory(self) -> np.ndarray:
        return self.series.memory_used


def ols_slope(y) -> float:
    """Least-squares slope of ``y`` against ``0..len(y)-1``."""
    y = np.asarray(y, dtype=np.float64)
    if y.size < 2:
        raise WindowTooShort(f"need at least 2 points, got {y.size}")
    x = np.arange(y.size, dtype=np.float64)
    dx = x - x.mean()
    return float(np.dot(dx, y - y.mean()) / np.dot(dx, dx))


def window_slopes(values, window: int, stride: int = 1) -> np.ndarray:
    """OLS slope of every window ``values[s:s+window]``, ``s = 0, stride, ...``."""
    y = np.asarray(values, dtype=np.float64)
    if window < 2:
        raise WindowTooShort(f"window {window} < 2")
    if y.size < window:
        raise SeriesShorterThanWindow(f"{y.size} samples < window {window}")
    wins = sliding_window_view(y, window)[::stride]
    dx = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    centered = wins - wins.mean(axis=1, keepdims=True)
    return centered @ dx / np.dot(dx, dx)


def label_by_trend(trend, cfg: LabelingConfig | None = None) -> np.ndarray:
    """Mark every sample covered by a window whose slope exceeds the threshold.

    Windows start at ``0, stride, 2*stride, ...`` and must fit entirely; when
    the stride does not divide evenly, the tail beyond the last full window is
    covered only by the windows that reach it. Overlaps combine by OR.
    """
    cfg = cfg or LabelingConfig()
    trend = np.asarray(trend, dtype=np.float64)
    n = trend.size
    slopes = window_slopes(trend, cfg.window_size, cfg.stride)
    starts = np.arange(slopes.size) * cfg.stride
    hot = starts[slopes > cfg.slope_threshold]
    # difference array: +1 at window start, -1 one past its end
    marks = np.zeros(n + 1, dtype=np.int64)
    np.add.at(marks, hot, 1)
    np.add.at(marks, hot + cfg.window_size, -1)
    return (np.cumsum(marks[:n]) > 0).astype(np.int8)


def consolidate(body_labels, warmup_len: int, series: MemorySeries | None = None):
    """Prefix ``warmup_len`` zeros to the body labels.

    Returns ``(labels, provenance)``, or a :class:`LabeledSeries` when the full
    ``series`` is given.
    """
    body = np.asarray(body_labels, dtype=np.int8)
    labels = np.concatenate([np.zeros(warmup_len, dtype=np.int8), body])
    prov = [Provenance.WARMUP] * warmup_len + [
        Provenance.TREND_WINDOW if v else Provenance.DEFAULT for v in body
    ]
    if series is None:
        return labels, tuple(prov)
    return LabeledSeries(series, labels, prov)


@dataclass(frozen=True)
class LabelingResult:
    labeled: LabeledSeries
    decomposition: object
    warmup_len: int


def label_series(series: MemorySeries, cfg: LabelingConfig | None = None,
                 stl: StlConfig | None = None) -> LabelingResult:
    """Full labeling pipeline: warm-up removal, STL, trend windows, consolidation."""
    cfg = cfg or LabelingConfig()
    stl = stl or StlConfig()
    warm, body = remove_warmup(series, cfg.warmup_seconds)
    deco = stl_decompose(body.memory_used, config=stl)
    body_labels = label_by_trend(deco.trend, cfg)
    labeled = consolidate(body_labels, len(warm), series)
    return LabelingResult(labeled, deco, len(warm))


def labeled_to_csv(labeled: LabeledSeries, provenance: bool = True) -> str:
    """CSV with ``label`` (and optionally ``provenance``) after the ingest columns."""
    extra = {"label": [str(int(v)) for v in labeled.labels]}
    if provenance:
        extra["provenance"] = [p.value for p in labeled.provenance]
    return series_to_csv(labeled.series, extra)


def parse_labeled_csv(text: str, profile: str = "Synthetic") -> LabeledSeries:
    """Read a CSV with a ``label`` column and an optional ``provenance`` column.

    Rows without provenance are taken as construction ground truth.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = parse_csv(text, profile)
    rows = [r for r in csv.DictReader(io.StringIO(text))
            if any((v or "").strip() for v in r.values())]
    if not rows or "label" not in rows[0]:
        raise MissingColumn("column 'label' not in header", 0)
    labels = np.empty(len(rows), dtype=np.int8)
    for k, row in enumerate(rows):
        v = (row["label"] or "").strip()
        if v not in ("0", "1"):
            raise ValueOutOfRange(f"label {v!r} is not 0 or 1 (row {k + 1})")
        labels[k] = int(v)
    if "provenance" in rows[0]:
        try:
            prov = tuple(Provenance(r["provenance"].strip()) for r in rows)
        except ValueError as exc:
            raise ValueOutOfRange(str(exc)) from None
    else:
        prov = (Provenance.CONSTRUCTION,) * len(rows)
    return LabeledSeries(series, labels, prov)
