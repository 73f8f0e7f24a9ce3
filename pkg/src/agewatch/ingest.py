"""Loading, validating and splitting resource-usage time series.

Series are stored as two float64 arrays (seconds since monitoring start and
memory in whatever unit the source used). The CSV layout is fixed::

    elapsed_seconds,memory_used
    0.0,1012.5
    5.0,1013.0
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFile,
    IrregularSampling,
    MissingColumn,
    NonFiniteValue,
    NonMonotonicTimestamps,
    WarmupConsumesEverything,
)

COLUMNS = ("elapsed_seconds", "memory_used")
# rows whose delta strays further than this from the median interval are rejected
MAX_INTERVAL_DEVIATION = 0.10
GRID_RTOL = 1e-6


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MemorySeries:
    """Timestamped memory samples for one workload profile."""

    profile: str
    sampling_interval_seconds: float
    elapsed_seconds: np.ndarray = field(repr=False)
    memory_used: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "elapsed_seconds", _frozen(self.elapsed_seconds))
        object.__setattr__(self, "memory_used", _frozen(self.memory_used))
        if self.elapsed_seconds.shape != self.memory_used.shape:
            raise ValueError("elapsed_seconds and memory_used differ in length")

    def __len__(self) -> int:
        return self.memory_used.size

    def slice(self, start: int | None = None, stop: int | None = None) -> "MemorySeries":
        return MemorySeries(
            self.profile,
            self.sampling_interval_seconds,
            self.elapsed_seconds[start:stop],
            self.memory_used[start:stop],
        )

    @classmethod
    def regular(cls, memory, interval: float = 5.0, profile: str = "Synthetic",
                start: float = 0.0) -> "MemorySeries":
        """Build a series on an exact ``start + i*interval`` time grid."""
        memory = np.asarray(memory, dtype=np.float64)
        t = start + interval * np.arange(memory.size, dtype=np.float64)
        return cls(profile, float(interval), t, memory)


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(x))


def _parse_rows(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFile("no header", 0) from None
    header = [h.strip() for h in header]
    for name in COLUMNS:
        if name not in header:
            raise MissingColumn(f"column {name!r} not in header {header}", 0)
    extra = [h for h in header if h not in COLUMNS]
    if extra:
        warnings.warn(f"ignoring extra columns {extra}", stacklevel=3)
    ti, mi = header.index(COLUMNS[0]), header.index(COLUMNS[1])
    times, mems = [], []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(ti, mi):
            raise MissingColumn("row is missing fields", row_no)
        try:
            t, m = float(row[ti]), float(row[mi])
        except ValueError:
            raise NonFiniteValue(f"unparseable value in {row!r}", row_no) from None
        if not (math.isfinite(t) and math.isfinite(m)):
            raise NonFiniteValue(f"non-finite value in {row!r}", row_no)
        if t < 0 or m < 0:
            raise NonFiniteValue(f"negative value in {row!r}", row_no)
        if times and t <= times[-1]:
            raise NonMonotonicTimestamps(f"{t} does not follow {times[-1]}", row_no)
        times.append(t)
        mems.append(m)
    if not times:
        raise EmptyFile("no data rows", 1)
    return np.array(times), np.array(mems)


def _normalize_grid(t: np.ndarray) -> tuple[np.ndarray, float]:
    if t.size == 1:
        return t, 1.0
    deltas = np.diff(t)
    interval = float(np.median(deltas))
    dev = np.abs(deltas - interval) / interval
    bad = np.flatnonzero(dev > MAX_INTERVAL_DEVIATION)
    if bad.size:
        raise IrregularSampling(
            f"interval {deltas[bad[0]]} deviates >10% from median {interval}", int(bad[0]) + 2
        )
    grid = t[0] + interval * np.arange(t.size)
    if np.all(dev <= GRID_RTOL):
        return t, interval
    return grid, interval


def parse_csv(text: str, profile: str = "Synthetic") -> MemorySeries:
    t, m = _parse_rows(text)
    t, interval = _normalize_grid(t)
    return MemorySeries(profile, interval, t, m)


def load_csv(path, profile: str = "Synthetic") -> MemorySeries:
    """Read a two-column memory CSV.

    Timestamps with small jitter (within 10% of the median delta) are snapped
    onto the regular grid; anything larger raises :class:`IrregularSampling`.
    """
    text = Path(path).read_text(encoding="utf-8")
    return parse_csv(text, profile)


def series_to_csv(series: MemorySeries, extra: dict | None = None) -> str:
    extra = extra or {}
    cols = list(extra)
    lines = [",".join(COLUMNS + tuple(cols))]
    for i, (t, m) in enumerate(zip(series.elapsed_seconds, series.memory_used)):
        parts = [format_float(t), format_float(m)]
        for c in cols:
            v = extra[c][i]
            parts.append(format_float(v) if isinstance(v, float) else str(v))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def write_csv(series: MemorySeries, path, extra: dict | None = None) -> None:
    """Write ``series`` (and optional same-length extra columns) as UTF-8 CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(series_to_csv(series, extra))


def remove_warmup(series: MemorySeries, warmup_seconds: float = 600.0):
    """Split off samples with ``elapsed_seconds < warmup_seconds``.

    Returns ``(warmup, body)``; concatenating them gives back ``series``.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    if warmup_seconds < 0:
        raise ValueError("warmup_seconds must be non-negative")
    cut = int(np.searchsorted(series.elapsed_seconds, warmup_seconds, side="left"))
    if cut >= len(series):
        raise WarmupConsumesEverything(
            f"warm-up of {warmup_seconds}s covers all {len(series)} samples"
        )
    return series.slice(0, cut), series.slice(cut, None)
