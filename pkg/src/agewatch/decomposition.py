"""Additive STL decomposition (Cleveland et al., 1990) built on a numpy LOESS.

Only the trend is consumed downstream (by the labeler); seasonal and residual
are kept for plotting and for checking the decomposition itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidPeriod, InvalidSpan, SeriesTooShort

# evaluation points per vectorized block, keeps the (points x span) matrices small
_CHUNK_ELEMENTS = 2_000_000


def _next_odd(x: float) -> int:
    n = int(math.ceil(x))
    return n if n % 2 == 1 else n + 1


def _tricube(u):
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = (1.0 - u[inside] ** 3) ** 3
    return out


def _loess_at(y, x0, span, degree, rweights=None):
    """LOESS fit of ``y`` (observed at 0..n-1) evaluated at float positions ``x0``.

    Each evaluation uses the ``span`` nearest observations; near the ends the
    neighbourhood becomes one-sided. When ``span > n`` the whole series is used
    and the bandwidth is widened by ``(span - n) // 2`` as in the reference code.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    q = min(span, n)
    out = np.empty(x0.size)
    step = max(1, _CHUNK_ELEMENTS // q)
    offs = np.arange(q)
    for lo in range(0, x0.size, step):
        xs = x0[lo:lo + step]
        left = np.clip(np.rint(xs).astype(np.int64) - (q - 1) // 2, 0, n - q)
        idx = left[:, None] + offs[None, :]
        xj = idx.astype(np.float64)
        h = np.maximum(xs - left, left + q - 1 - xs)
        if span > n:
            h = h + (span - n) // 2
        h = np.maximum(h, 1e-12)
        w = _tricube(np.abs(xj - xs[:, None]) / h[:, None])
        if rweights is not None:
            w = w * rweights[idx]
        a = w.sum(axis=1)
        yw = y[idx]
        degenerate = a <= 0.0
        if degenerate.any():
            # no weighted support (robustness weights all zero): plain window mean
            w[degenerate] = 1.0
            a[degenerate] = q
        w = w / a[:, None]
        if degree == 1:
            xbar = np.sum(w * xj, axis=1)
            dx = xj - xbar[:, None]
            c = np.sum(w * dx * dx, axis=1)
            ok = np.sqrt(c) > 1e-3 * max(n - 1, 1)
            b = np.zeros_like(c)
            b[ok] = (xs[ok] - xbar[ok]) / c[ok]
            w = w * (1.0 + b[:, None] * dx)
        out[lo:lo + step] = np.sum(w * yw, axis=1)
    return out


def loess_smooth(values, span: int, degree: int = 1, jump: int = 1,
                 weights=None) -> np.ndarray:
    """Locally weighted regression with tricube weights.

    Parameters
    ----------
    values : array_like
        Observations at positions ``0..n-1``.
    span : int
        Odd neighbourhood size, ``degree + 1 <= span <= n``.
    degree : {0, 1}
        Local constant or local linear fit.
    jump : int
        Fit every ``jump``-th point (plus the last) and interpolate linearly in
        between. ``jump=1`` evaluates every point exactly.
    weights : array_like, optional
        Extra per-observation weights (robustness weights in STL).
    """
    y = np.asarray(values, dtype=np.float64)
    n = y.size
    if degree not in (0, 1):
        raise InvalidSpan(f"degree must be 0 or 1, got {degree}")
    if span % 2 == 0 or span > n or span < degree + 1 or span < 1:
        raise InvalidSpan(f"span {span} invalid for {n} values, degree {degree}")
    rw = None if weights is None else np.asarray(weights, dtype=np.float64)
    return _smooth(y, span, degree, jump, rw)


def _smooth(y, span, degree, jump, rw):
    n = y.size
    if jump <= 1 or n <= 2:
        return _loess_at(y, np.arange(n), span, degree, rw)
    pos = np.arange(0, n, jump)
    if pos[-1] != n - 1:
        pos = np.append(pos, n - 1)
    fitted = _loess_at(y, pos, span, degree, rw)
    return np.interp(np.arange(n), pos, fitted)


@dataclass(frozen=True)
class StlConfig:
    """STL parameters; unset spans fall back to Cleveland's recommendations."""

    period: int = 720
    seasonal_span: int = 7
    seasonal_degree: int = 0
    trend_span: int | None = None
    trend_degree: int = 1
    lowpass_span: int | None = None
    inner_iterations: int = 5
    outer_iterations: int = 1
    # None -> ceil(span / 10), the reference implementation's default
    seasonal_jump: int | None = None
    trend_jump: int | None = None
    lowpass_jump: int | None = None
    normalize_seasonal: bool = True

    def resolved(self) -> "StlConfig":
        ns = self.seasonal_span
        nt = self.trend_span or _next_odd(1.5 * self.period / (1.0 - 1.5 / ns))
        nl = self.lowpass_span or _next_odd(self.period)
        return StlConfig(
            period=self.period,
            seasonal_span=ns,
            seasonal_degree=self.seasonal_degree,
            trend_span=nt,
            trend_degree=self.trend_degree,
            lowpass_span=nl,
            inner_iterations=self.inner_iterations,
            outer_iterations=self.outer_iterations,
            seasonal_jump=self.seasonal_jump or math.ceil(ns / 10),
            trend_jump=self.trend_jump or math.ceil(nt / 10),
            lowpass_jump=self.lowpass_jump or math.ceil(nl / 10),
            normalize_seasonal=self.normalize_seasonal,
        )


@dataclass(frozen=True)
class Decomposition:
    trend: np.ndarray = field(repr=False)
    seasonal: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    period: int

    def to_csv(self) -> str:
        lines = ["index,trend,seasonal,residual"]
        for i, (t, s, r) in enumerate(zip(self.trend, self.seasonal, self.residual)):
            lines.append(f"{i},{t!r},{s!r},{r!r}")
        return "\n".join(lines) + "\n"


def _moving_average(x, k):
    c = np.cumsum(np.concatenate(([0.0], x)))
    return (c[k:] - c[:-k]) / k


def _cycle_subseries(y, period, cfg, rw):
    """Smooth each cycle-subseries, extrapolating one cycle past both ends."""
    n = y.size
    out = np.empty(n + 2 * period)
    for j in range(period):
        sub = y[j::period]
        m = sub.size
        srw = None if rw is None else rw[j::period]
        pos = np.arange(-1, m + 1, dtype=np.float64)
        if cfg.seasonal_jump > 1 and m > 2:
            inner = np.arange(0, m, cfg.seasonal_jump)
            if inner[-1] != m - 1:
                inner = np.append(inner, m - 1)
            fit = _loess_at(sub, inner, cfg.seasonal_span, cfg.seasonal_degree, srw)
            mid = np.interp(np.arange(m), inner, fit)
            ends = _loess_at(sub, [-1.0, float(m)], cfg.seasonal_span,
                             cfg.seasonal_degree, srw)
            vals = np.concatenate(([ends[0]], mid, [ends[1]]))
        else:
            vals = _loess_at(sub, pos, cfg.seasonal_span, cfg.seasonal_degree, srw)
        # positions -1..m of subseries j map to j + period * (pos + 1) in out
        out[j::period][: m + 2] = vals
    return out


def _inner_pass(y, trend, cfg, rw):
    period = cfg.period
    n = y.size
    cycle = _cycle_subseries(y - trend, period, cfg, rw)
    low = _moving_average(_moving_average(_moving_average(cycle, period), period), 3)
    low = _smooth(low, cfg.lowpass_span, 1, cfg.lowpass_jump, None)
    seasonal = cycle[period:period + n] - low
    trend = _smooth(y - seasonal, cfg.trend_span, cfg.trend_degree, cfg.trend_jump, rw)
    return trend, seasonal


def _robustness_weights(resid):
    h = 6.0 * np.median(np.abs(resid))
    if h == 0.0:
        return np.ones_like(resid)
    u = np.abs(resid) / h
    w = np.zeros_like(resid)
    inside = u < 1.0
    w[inside] = (1.0 - u[inside] ** 2) ** 2
    return w


def _normalize(trend, seasonal, period):
    """Shift a continuous piecewise-linear term from seasonal into trend.

    Knots sit at the centre of each full cycle ``[k*period, (k+1)*period)``;
    their values are solved so that every full cycle of the corrected
    seasonal component averages to zero.
    """
    n = seasonal.size
    k = n // period
    t = np.arange(n, dtype=np.float64)
    centers = np.arange(k) * period + (period - 1) / 2.0
    block_means = seasonal[: k * period].reshape(k, period).mean(axis=1)

    def hat(j, lo, hi):
        x = t[lo:hi]
        h = np.clip(1.0 - np.abs(x - centers[j]) / period, 0.0, None)
        if j == 0:
            h[x <= centers[0]] = 1.0
        if j == k - 1:
            h[x >= centers[-1]] = 1.0
        return h

    # banded layout for solve_banded: row 0 super-, 1 main, 2 sub-diagonal
    ab = np.zeros((3, k))
    for j in range(k):
        for row, blk in ((0, j - 1), (1, j), (2, j + 1)):
            if 0 <= blk < k:
                lo = blk * period
                ab[row, j] = hat(j, lo, lo + period).mean()
    knots = solve_banded((1, 1), ab, block_means)
    corr = np.interp(t, centers, knots)
    return trend + corr, seasonal - corr


def _exact_residual(y, trend, seasonal):
    """Remainder chosen so that ``trend + seasonal + residual == y`` in floats.

    ``y - (trend + seasonal)`` already satisfies this whenever the residual is
    not much larger than the value itself; the few stragglers are nudged by
    single ulps.
    """
    fitted = trend + seasonal
    resid = y - fitted
    bad = np.flatnonzero(fitted + resid != y)
    for i in bad:
        r = resid[i]
        for direction in (np.inf, -np.inf):
            cand = r
            for _ in range(4):
                cand = np.nextafter(cand, direction)
                if fitted[i] + cand == y[i]:
                    resid[i] = cand
                    break
            if fitted[i] + resid[i] == y[i]:
                break
    return resid


def stl_decompose(values, period: int | None = None,
                  config: StlConfig | None = None) -> Decomposition:
    """Split ``values`` into trend + seasonal + residual.

    The residual is defined as ``values - trend - seasonal`` so the additive
    identity holds exactly. ``period`` overrides ``config.period``.
    """
    cfg = config or StlConfig()
    if period is not None:
        cfg = StlConfig(**{**cfg.__dict__, "period": period})
    cfg = cfg.resolved()
    y = np.asarray(values, dtype=np.float64)
    if cfg.period < 2:
        raise InvalidPeriod(f"period must be >= 2, got {cfg.period}")
    if y.size < 2 * cfg.period:
        raise SeriesTooShort(f"{y.size} values < 2 * period ({cfg.period})")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite")

    trend = np.zeros_like(y)
    rw = None
    for outer in range(cfg.outer_iterations + 1):
        for _ in range(cfg.inner_iterations):
            trend, seasonal = _inner_pass(y, trend, cfg, rw)
        if outer < cfg.outer_iterations:
            rw = _robustness_weights(y - trend - seasonal)
    if cfg.normalize_seasonal:
        trend, seasonal = _normalize(trend, seasonal, cfg.period)
    residual = _exact_residual(y, trend, seasonal)
    return Decomposition(trend, seasonal, residual, cfg.period)
