"""Causal per-sample feature vectors for the classifier.

For sample ``i`` (with ``i >= window``) the row is::

    [memory(i), mean(w), std(w), slope(w), memory(i) - memory(i-1)]

where ``w`` is the trailing window ``memory[i-window+1 .. i]``. Nothing after
``i`` is used, so rows can be produced on a live stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import SeriesTooShort
from .labeling import LabeledSeries

FEATURE_NAMES = ("memory_used", "rolling_mean", "rolling_std", "rolling_slope", "first_difference")


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of features with labels and the sample index each row came from."""

    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)
    names: tuple = FEATURE_NAMES
    # per-row workload profile, when the source stream recorded it
    source: tuple | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.y.size

    @property
    def width(self) -> int:
        return self.X.shape[1]

    def subset(self, sl) -> "FeatureMatrix":
        src = None if self.source is None else tuple(np.asarray(self.source, dtype=object)[sl])
        return FeatureMatrix(self.X[sl], self.y[sl], self.index[sl], self.names, src)

    def to_csv(self) -> str:
        lines = ["index," + ",".join(self.names) + ",label"]
        for idx, row, lab in zip(self.index, self.X, self.y):
            lines.append(f"{idx}," + ",".join(repr(float(v)) for v in row) + f",{lab}")
        return "\n".join(lines) + "\n"


def rolling_features(memory, window: int = 12) -> np.ndarray:
    """Feature rows for samples ``window .. n-1`` of a raw memory array."""
    m = np.asarray(memory, dtype=np.float64)
    if window < 2:
        raise ValueError("window must be >= 2")
    if m.size <= window:
        raise SeriesTooShort(f"{m.size} samples, need more than window={window}")
    wins = sliding_window_view(m, window)[1:]  # wins[k] ends at sample window + k
    current = m[window:]
    mean = wins.mean(axis=1)
    centered = wins - mean[:, None]
    std = np.sqrt(np.mean(centered * centered, axis=1))
    dx = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    slope = centered @ dx / np.dot(dx, dx)
    flat = wins.max(axis=1) == wins.min(axis=1)
    mean[flat] = current[flat]
    std[flat] = 0.0
    slope[flat] = 0.0
    diff = current - m[window - 1:-1]
    return np.column_stack([current, mean, std, slope, diff])


def extract_features(series: LabeledSeries, window: int = 12) -> FeatureMatrix:
    """One row per sample ``i >= window``; the label is copied from sample ``i``."""
    X = rolling_features(series.memory, window)
    idx = np.arange(window, len(series))
    src = None if series.source is None else series.source[window:]
    y = np.asarray(series.labels[window:], dtype=np.int8)
    return FeatureMatrix(X, y, idx, FEATURE_NAMES, src)
