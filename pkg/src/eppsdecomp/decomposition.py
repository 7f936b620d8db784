"""Prediction of the Epps curve from base-scale lagged correlations.

A return over ``dt = n * dt0`` is the sum of ``n`` consecutive base returns,
so the equal-time product average at ``dt`` expands into a triangular sum
of lagged base-scale product averages. Normalising each lagged average by
its lag-0 value gives the decay functions; the cross decay and the two
auto decays, plus the base correlation ``rho0``, fix the whole curve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from eppsdecomp import _backend
from eppsdecomp.correlator import (
    EppsCurve,
    EstimationError,
    ReturnSeries,
    _aligned_days,
    _as_days,
    _paired,
)
from eppsdecomp.tickstore import DataWarning

__all__ = [
    "DecayFunction",
    "DecompositionInput",
    "GoodnessStats",
    "aggregate_returns",
    "product_average",
    "mean_free_correlation",
    "estimate_decay",
    "delta_decay",
    "truncate_cross",
    "truncate_auto",
    "triangular_sum",
    "predict_correlation",
    "predict_epps_curve",
    "build_input",
    "goodness",
    "decompose_pair",
    "write_decay_csv",
    "write_goodness_csv",
]

DEFAULT_DT0 = 120
DEFAULT_MAX_LAG_SECONDS = 1000


@dataclass(frozen=True, eq=False)
class DecayFunction:
    """Normalised lagged product average ``f(x * dt0)`` for ``x = -L..L``.

    ``cut_pos`` / ``cut_neg`` are the first lags set to zero on each side;
    ``None`` means the function is untruncated (``truncated`` equals
    ``raw``). A truncated function is zero beyond the stored lags as well.
    """

    dt0: int
    kind: str
    raw: np.ndarray = field(repr=False)
    truncated: np.ndarray | None = field(default=None, repr=False)
    cut_pos: int | None = None
    cut_neg: int | None = None
    fallback_pos: bool = False
    fallback_neg: bool = False

    def __post_init__(self):
        raw = np.array(self.raw, dtype=np.float64, copy=True)
        if raw.ndim != 1 or raw.size % 2 != 1:
            raise ValueError("raw must hold an odd number of lags, symmetric around 0")
        raw.flags.writeable = False
        object.__setattr__(self, "raw", raw)
        trunc = raw if self.truncated is None else np.array(self.truncated, dtype=np.float64)
        if trunc.shape != raw.shape:
            raise ValueError("truncated and raw differ in shape")
        if trunc is not raw:
            trunc.flags.writeable = False
        object.__setattr__(self, "truncated", trunc)
        if self.kind not in ("cross", "auto"):
            raise ValueError(f"kind must be 'cross' or 'auto', got {self.kind!r}")

    @property
    def max_lag(self) -> int:
        return self.raw.size // 2

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)

    @property
    def is_truncated(self) -> bool:
        return self.cut_pos is not None

    def at(self, x: int, truncated: bool = True) -> float:
        values = self.truncated if truncated else self.raw
        if abs(x) > self.max_lag:
            if truncated and self.is_truncated:
                return 0.0
            raise IndexError(f"lag {x} outside the measured range +-{self.max_lag}")
        return float(values[x + self.max_lag])


@dataclass(frozen=True)
class DecompositionInput:
    rho0: float
    fAB: DecayFunction
    fAA: DecayFunction
    fBB: DecayFunction

    def __post_init__(self):
        if not self.fAB.dt0 == self.fAA.dt0 == self.fBB.dt0:
            raise ValueError("decay functions must share dt0")

    @property
    def dt0(self) -> int:
        return self.fAB.dt0


@dataclass(frozen=True)
class GoodnessStats:
    dt: np.ndarray
    g: np.ndarray
    max: float
    mean: float
    median: float
    excluded: tuple = ()
    negative: tuple = ()


# ---------------------------------------------------------------------------
# base-scale statistics


def aggregate_returns(base: ReturnSeries, n: int) -> ReturnSeries:
    """Returns over ``n * base.dt`` as sums of ``n`` consecutive non-overlapping base returns.

    Only valid for base series sampled at their own horizon (``step == dt``).
    """
    if base.step != base.dt:
        raise ValueError("aggregation needs a base series with step == dt")
    if n < 1:
        raise ValueError("n must be >= 1")
    v = base.values
    if n > v.size:
        values = v[:0]
    else:
        c = np.concatenate(([0.0], np.cumsum(v)))
        values = c[n:] - c[:-n]
    return ReturnSeries(
        base.dt * n, base.t_start + (n - 1) * base.step, values, base.step, base.date, base.symbol
    )


def _day_product_means(ra, rb, tau):
    out = []
    for a, b in _aligned_days(ra, rb):
        x, y = _paired(a, b, tau)
        if x.size:
            out.append(_backend.exact_dot(x, y) / x.size)
    return out


def product_average(ra, rb, x: int) -> float:
    """Day-averaged ``<ra(t) rb(t + x*dt)>`` without mean subtraction."""
    dt = _as_days(ra)[0].dt if not isinstance(ra, ReturnSeries) else ra.dt
    means = _day_product_means(ra, rb, int(x) * dt)
    if not means:
        raise EstimationError(f"no valid pairs at lag {x}")
    return _backend.exact_sum(np.array(means)) / len(means)


def mean_free_correlation(ra, rb) -> float:
    """``<ab> / sqrt(<a^2><b^2>)`` from day-averaged product averages."""
    ab = product_average(ra, rb, 0)
    aa = product_average(ra, ra, 0)
    bb = product_average(rb, rb, 0)
    if aa <= 0 or bb <= 0:
        raise EstimationError("zero second moment")
    return ab / math.sqrt(aa * bb)


def _same_series(ra, rb) -> bool:
    if ra is rb:
        return True
    da, db = _as_days(ra), _as_days(rb)
    if len(da) != len(db):
        return False
    return all(
        a.date == b.date and a.t_start == b.t_start and np.array_equal(a.values, b.values)
        for a, b in zip(da, db)
    )


def estimate_decay(ra, rb, max_lag: int, kind: str | None = None) -> DecayFunction:
    """Raw decay function for lags ``-max_lag..max_lag`` (untruncated).

    Lag ``x`` means ``x * dt`` seconds, ``dt`` being the series' return
    horizon; overlapping series (``step < dt``) use every aligned pair.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    first = ra if isinstance(ra, ReturnSeries) else _as_days(ra)[0]
    norm = product_average(ra, rb, 0)
    if norm == 0:
        raise EstimationError("lag-0 product average is zero")
    raw = np.empty(2 * max_lag + 1)
    for i, x in enumerate(range(-max_lag, max_lag + 1)):
        raw[i] = 1.0 if x == 0 else product_average(ra, rb, x) / norm
    if kind is None:
        kind = "auto" if _same_series(ra, rb) else "cross"
    return DecayFunction(first.dt, kind, raw)


def delta_decay(dt0: int, kind: str = "auto", max_lag: int = 0) -> DecayFunction:
    """Decay function of uncorrelated increments: 1 at lag 0, 0 elsewhere."""
    raw = np.zeros(2 * max_lag + 1)
    raw[max_lag] = 1.0
    return DecayFunction(dt0, kind, raw, raw.copy(), max_lag + 1, -(max_lag + 1))


# ---------------------------------------------------------------------------
# truncation


def _cut_cross_side(side: np.ndarray) -> int:
    # side[k] is the value at lag k+1; returns the first lag set to zero
    bad = np.nonzero(~(side > 0))[0]
    return int(bad[0]) + 1 if bad.size else side.size + 1


def _cut_auto_side(side: np.ndarray) -> tuple[int, bool]:
    if side.size == 0 or side[0] >= 0:
        return _cut_cross_side(side), True
    back = np.nonzero(side >= 0)[0]
    return (int(back[0]) + 1 if back.size else side.size + 1), False


def _apply_cuts(f: DecayFunction, cut_pos: int, cut_neg: int, **flags) -> DecayFunction:
    lags = f.lags
    keep = (lags < cut_pos) & (lags > cut_neg)
    return replace(
        f,
        truncated=np.where(keep, f.raw, 0.0),
        cut_pos=cut_pos,
        cut_neg=cut_neg,
        **flags,
    )


def truncate_cross(f: DecayFunction) -> DecayFunction:
    """Zero each side from the first lag where the function is no longer positive."""
    if f.kind != "cross":
        raise ValueError("truncate_cross expects a cross decay function")
    L = f.max_lag
    pos = _cut_cross_side(f.raw[L + 1 :])
    neg = _cut_cross_side(f.raw[:L][::-1])
    return _apply_cuts(f, pos, -neg, fallback_pos=False, fallback_neg=False)


def truncate_auto(f: DecayFunction) -> DecayFunction:
    """Keep the initial negative overshoot; zero from its first return to >= 0.

    A side without overshoot (value at lag 1 is >= 0) uses the cross rule
    instead and is flagged.
    """
    if f.kind != "auto":
        raise ValueError("truncate_auto expects an auto decay function")
    L = f.max_lag
    pos, fb_pos = _cut_auto_side(f.raw[L + 1 :])
    neg, fb_neg = _cut_auto_side(f.raw[:L][::-1])
    return _apply_cuts(f, pos, -neg, fallback_pos=fb_pos, fallback_neg=fb_neg)


# ---------------------------------------------------------------------------
# prediction


def _ratio(dt, dt0) -> int:
    if dt <= 0 or dt % dt0:
        raise ValueError(f"dt={dt} is not a positive multiple of dt0={dt0}")
    return int(dt // dt0)


def triangular_sum(f: DecayFunction, n: int) -> float:
    """``sum_{|x|<n} (n - |x|) f(x)`` over the truncated values."""
    L = f.max_lag
    m = n - 1
    if m > L and not f.is_truncated:
        raise ValueError(
            f"untruncated decay function covers lags up to {L}, {m} needed"
        )
    k = min(m, L)
    lags = np.arange(-k, k + 1)
    vals = f.truncated[L - k : L + k + 1]
    return _backend.exact_dot((n - np.abs(lags)).astype(np.float64), vals)


def predict_correlation(inp: DecompositionInput, dt: int) -> float:
    """Correlation at scale ``dt`` from base-scale decays and ``rho0``."""
    n = _ratio(dt, inp.dt0)
    s_ab = triangular_sum(inp.fAB, n)
    s_aa = triangular_sum(inp.fAA, n)
    s_bb = triangular_sum(inp.fBB, n)
    if not s_aa > 0:
        raise EstimationError(f"A/A autocorrelation sum is {s_aa} at dt={dt}")
    if not s_bb > 0:
        raise EstimationError(f"B/B autocorrelation sum is {s_bb} at dt={dt}")
    return s_ab / math.sqrt(s_aa * s_bb) * inp.rho0


def predict_epps_curve(inp: DecompositionInput, grid, pair=("A", "B")) -> EppsCurve:
    grid = np.asarray(grid, dtype=np.int64)
    rho = np.array([predict_correlation(inp, int(dt)) for dt in grid])
    return EppsCurve(tuple(pair), grid, rho, "predicted")


def build_input(ra, rb, max_lag: int, rho0: float | None = None, truncate=True) -> DecompositionInput:
    """Measure the three decay functions (and ``rho0`` unless given) at the base scale."""
    fab = estimate_decay(ra, rb, max_lag, kind="cross")
    faa = estimate_decay(ra, ra, max_lag, kind="auto")
    fbb = estimate_decay(rb, rb, max_lag, kind="auto")
    if truncate:
        fab, faa, fbb = truncate_cross(fab), truncate_auto(faa), truncate_auto(fbb)
    if rho0 is None:
        rho0 = mean_free_correlation(ra, rb)
    return DecompositionInput(float(rho0), fab, faa, fbb)


# ---------------------------------------------------------------------------
# agreement


def goodness(measured: EppsCurve, predicted: EppsCurve) -> GoodnessStats:
    """Percent deviation ``100 |m - p| / |m|`` per scale with max, mean, median.

    Scales where the measured value is 0 are excluded; negative measured
    values are kept (denominator ``|m|``) and listed in ``negative``.
    """
    if not np.array_equal(measured.grid, predicted.grid):
        raise ValueError("measured and predicted curves must share the same grid")
    m = measured.rho
    p = predicted.rho
    ok = m != 0
    excluded = tuple(int(x) for x in measured.grid[~ok])
    negative = tuple(int(x) for x in measured.grid[m < 0])
    if excluded:
        warnings.warn(f"goodness: excluded scales with zero measured rho: {excluded}", DataWarning)
    if negative:
        warnings.warn(f"goodness: negative measured rho at {negative}", DataWarning)
    if not ok.any():
        raise EstimationError("no comparable points")
    g = 100.0 * np.abs(m[ok] - p[ok]) / np.abs(m[ok])
    return GoodnessStats(
        measured.grid[ok],
        g,
        float(g.max()),
        _backend.exact_sum(g) / g.size,
        float(np.median(g)),
        excluded,
        negative,
    )


@dataclass(frozen=True)
class DecompositionResult:
    measured: EppsCurve
    predicted: EppsCurve
    inputs: DecompositionInput
    stats: GoodnessStats


def decompose_pair(A, B, grid, dt0: int = DEFAULT_DT0, max_lag: int | None = None) -> DecompositionResult:
    """Measure the Epps curve of two tick series and predict it from scale ``dt0``.

    The base correlation is the measured curve's value at ``dt0`` when the
    grid contains it, otherwise the mean-free base-scale correlation.
    """
    from eppsdecomp.correlator import epps_curve, return_days
    from eppsdecomp.tickstore import build_grids

    grid = np.asarray(grid, dtype=np.int64)
    if max_lag is None:
        max_lag = max(1, DEFAULT_MAX_LAG_SECONDS // dt0)
    measured = epps_curve(A, B, grid, base=dt0)
    ga = {g.date: g for g in build_grids(A, dt0)}
    gb = {g.date: g for g in build_grids(B, dt0)}
    dates = sorted(set(ga) & set(gb))
    ra = _nonempty(return_days([ga[d] for d in dates], dt0))
    rb = _nonempty(return_days([gb[d] for d in dates], dt0))
    hit = np.nonzero(grid == dt0)[0]
    rho0 = float(measured.rho[hit[0]]) if hit.size else None
    inputs = build_input(ra, rb, max_lag, rho0=rho0)
    predicted = predict_epps_curve(inputs, grid, measured.pair)
    return DecompositionResult(measured, predicted, inputs, goodness(measured, predicted))


def _nonempty(days):
    return [d for d in days if len(d)]


def write_decay_csv(f: DecayFunction, path) -> None:
    """``x_lag,raw,truncated`` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x_lag,raw,truncated\n")
        for x, r, t in zip(f.lags.tolist(), f.raw.tolist(), f.truncated.tolist()):
            fh.write(f"{x},{format(r, '.17g')},{format(t, '.17g')}\n")


def write_goodness_csv(stats: GoodnessStats, path) -> None:
    """``dt_seconds,g_percent`` rows followed by a ``max,mean,median`` summary."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dt_seconds,g_percent\n")
        for dt, g in zip(stats.dt.tolist(), stats.g.tolist()):
            fh.write(f"{dt},{format(g, '.17g')}\n")
        fh.write("# max,mean,median\n")
        fh.write("# " + ",".join(format(v, ".17g") for v in (stats.max, stats.mean, stats.median)) + "\n")
