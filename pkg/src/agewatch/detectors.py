"""Streaming change detectors fed with a 0/1 misclassification stream.

DDM follows Gama et al. (2004): track the running error rate ``p`` and its
standard deviation ``s``, remember the point where ``p + s`` was smallest, and
raise Warning/Drift when ``p + s`` climbs 2/3 standard deviations above it.

ADWIN follows Bifet & Gavaldà (2007), in the bucketed (ADWIN2) form: the
window lives in an exponential histogram, and every boundary between buckets
is tried as a cut between an older and a newer sub-window.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from numba import njit

from .errors import ValueOutOfRange

MAX_LEVELS = 64


class Phase(str, enum.Enum):
    IN_CONTROL = "InControl"
    WARNING = "Warning"
    DRIFT = "Drift"


class DDM:
    """Drift Detection Method over a stream of 0/1 errors.

    Parameters
    ----------
    min_num_instances : int
        No warning or drift is raised before this many samples.
    warning_level, drift_level : float
        Multiples of ``s_min`` above ``p_min`` for the two alarms.
    """

    name = "DDM"

    def __init__(self, min_num_instances: int = 30, warning_level: float = 2.0,
                 drift_level: float = 3.0):
        self.min_num_instances = min_num_instances
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.reset()

    def reset(self) -> "DDM":
        self.n = 0
        self.p = 0.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf
        self.phase = Phase.IN_CONTROL
        return self

    def update(self, error) -> Phase:
        self.n += 1
        self.p += (float(error) - self.p) / self.n
        self.s = math.sqrt(self.p * (1.0 - self.p) / self.n)
        if self.n < self.min_num_instances:
            self.phase = Phase.IN_CONTROL
            return self.phase
        if self.p + self.s < self.p_min + self.s_min:
            self.p_min, self.s_min = self.p, self.s
        level = self.p + self.s
        # strict inequalities: with p_min = s_min = 0 an error-free stream stays in control
        if level > self.p_min + self.drift_level * self.s_min:
            self.phase = Phase.DRIFT
        elif level > self.p_min + self.warning_level * self.s_min:
            self.phase = Phase.WARNING
        else:
            self.phase = Phase.IN_CONTROL
        return self.phase

    def params(self) -> dict:
        return {"detector": self.name, "min_num_instances": self.min_num_instances,
                "warning_level": self.warning_level, "drift_level": self.drift_level}


@njit(cache=True)
def _drop_oldest(sums, variances, nb, istate, fstate):
    top = istate[0] - 1
    size = 1 << top
    s = sums[top, 0]
    v = variances[top, 0]
    for j in range(nb[top] - 1):
        sums[top, j] = sums[top, j + 1]
        variances[top, j] = variances[top, j + 1]
    nb[top] -= 1
    if nb[top] == 0:
        istate[0] -= 1
    count = istate[1] - size
    total = fstate[0] - s
    if count > 0:
        mean_rest = total / count
        fstate[1] -= v + size * count * (s / size - mean_rest) ** 2 / (size + count)
    else:
        total = 0.0
        fstate[1] = 0.0
    istate[1] = count
    fstate[0] = total
    return size


@njit(cache=True)
def _insert(value, sums, variances, nb, istate, fstate, max_buckets):
    count = istate[1]
    if count > 0:
        mean = fstate[0] / count
        fstate[1] += count * (value - mean) ** 2 / (count + 1)
    istate[1] = count + 1
    fstate[0] += value
    sums[0, nb[0]] = value
    variances[0, nb[0]] = 0.0
    nb[0] += 1
    if istate[0] == 0:
        istate[0] = 1
    level = 0
    while nb[level] > max_buckets:
        size = 1 << level
        s0, s1 = sums[level, 0], sums[level, 1]
        v = (variances[level, 0] + variances[level, 1]
             + size * size * (s0 / size - s1 / size) ** 2 / (2 * size))
        for j in range(nb[level] - 2):
            sums[level, j] = sums[level, j + 2]
            variances[level, j] = variances[level, j + 2]
        nb[level] -= 2
        nxt = level + 1
        sums[nxt, nb[nxt]] = s0 + s1
        variances[nxt, nb[nxt]] = v
        nb[nxt] += 1
        if istate[0] < nxt + 1:
            istate[0] = nxt + 1
        level = nxt


@njit(cache=True)
def _cut_fires(sums, nb, istate, fstate, delta):
    n_levels = istate[0]
    n_buckets = 0
    for lv in range(n_levels):
        n_buckets += nb[lv]
    n_cuts = n_buckets - 1
    if n_cuts < 1:
        return False
    log_term = math.log(4.0 * n_cuts / delta)
    count = istate[1]
    total = fstate[0]
    n0 = 0
    s0 = 0.0
    seen = 0
    for lv in range(n_levels - 1, -1, -1):
        size = 1 << lv
        for j in range(nb[lv]):
            seen += 1
            if seen > n_cuts:
                return False
            n0 += size
            s0 += sums[lv, j]
            n1 = count - n0
            m = 1.0 / (1.0 / n0 + 1.0 / n1)
            eps = math.sqrt(log_term / (2.0 * m))
            if abs(s0 / n0 - (total - s0) / n1) >= eps:
                return True
    return False


@njit(cache=True)
def _feed(values, sums, variances, nb, istate, fstate, delta, max_buckets, stop_at_first,
          flags):
    """Process ``values``, marking detections in ``flags``.

    Returns (number consumed, index of last detection or -1).
    """
    last = -1
    for i in range(values.size):
        _insert(values[i], sums, variances, nb, istate, fstate, max_buckets)
        fired = False
        istate[2] = 0
        while _cut_fires(sums, nb, istate, fstate, delta):
            size = _drop_oldest(sums, variances, nb, istate, fstate)
            if size > istate[2]:
                istate[2] = size
            fired = True
        if fired:
            flags[i] = 1
            last = i
            if stop_at_first:
                return i + 1, last
    return values.size, last


class ADWIN:
    """Adaptive windowing change detector for values in ``[0, 1]``.

    Parameters
    ----------
    delta : float
        Confidence parameter; the per-update budget is split evenly over the
        cut points examined.
    max_buckets : int
        Buckets kept per histogram level before the two oldest are merged.
    """

    name = "ADWIN"

    def __init__(self, delta: float = 0.002, max_buckets: int = 5):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if max_buckets < 2:
            raise ValueError("max_buckets must be >= 2")
        self.delta = delta
        self.max_buckets = max_buckets
        self.reset()

    def reset(self) -> "ADWIN":
        self._sums = np.zeros((MAX_LEVELS, self.max_buckets + 1))
        self._vars = np.zeros((MAX_LEVELS, self.max_buckets + 1))
        self._nb = np.zeros(MAX_LEVELS, dtype=np.int64)
        # levels in use, element count, largest bucket dropped by the last update
        self._istate = np.zeros(3, dtype=np.int64)
        self._fstate = np.zeros(2)                    # sum, sum of squared deviations
        self.change_detected = False
        return self

    @property
    def width(self) -> int:
        return int(self._istate[1])

    @property
    def total(self) -> float:
        return float(self._fstate[0])

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def variance(self) -> float:
        return float(self._fstate[1]) / self.width if self.width else 0.0

    @property
    def last_dropped_size(self) -> int:
        """Size of the largest bucket dropped by the most recent update (0 if none)."""
        return int(self._istate[2])

    def level_counts(self) -> list:
        """Buckets held at each level, level 0 (size 1) first."""
        return [int(c) for c in self._nb[: self._istate[0]]]

    def buckets(self) -> list:
        """``(size, sum, variance)`` per bucket, oldest first."""
        out = []
        for lv in range(self._istate[0] - 1, -1, -1):
            for j in range(self._nb[lv]):
                out.append((1 << lv, float(self._sums[lv, j]), float(self._vars[lv, j])))
        return out

    def _feed(self, values, stop_at_first, flags=None):
        if flags is None:
            flags = np.zeros(values.size, dtype=np.int8)
        return _feed(values, self._sums, self._vars, self._nb, self._istate, self._fstate,
                     self.delta, self.max_buckets, stop_at_first, flags)

    @staticmethod
    def _checked(values):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.size and not (arr.min() >= 0.0 and arr.max() <= 1.0):
            raise ValueOutOfRange("values outside [0, 1]")
        return arr

    def update(self, value) -> bool:
        """Add one value; True when at least one cut fired and the window shrank."""
        v = float(value)
        if not 0.0 <= v <= 1.0:
            raise ValueOutOfRange(f"{value} outside [0, 1]")
        _, last = self._feed(np.array([v]), False)
        self.change_detected = last >= 0
        return self.change_detected

    def update_until_change(self, values) -> int:
        """Feed values until the first change; returns its offset or -1."""
        _, last = self._feed(self._checked(values), True)
        self.change_detected = last >= 0
        return last

    def detections(self, values) -> np.ndarray:
        """Feed every value; returns the offsets at which a change fired."""
        arr = self._checked(values)
        flags = np.zeros(arr.size, dtype=np.int8)
        _, last = self._feed(arr, False, flags)
        self.change_detected = last == arr.size - 1 and arr.size > 0
        return np.flatnonzero(flags)

    def params(self) -> dict:
        return {"detector": self.name, "delta": self.delta, "max_buckets": self.max_buckets}
