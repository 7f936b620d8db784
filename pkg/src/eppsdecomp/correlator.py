"""Log-returns, lagged cross-correlations and Epps curves.

All statistics are evaluated one trading day at a time and then averaged
over days with equal weight, so overnight returns never enter. Day-level
reductions use correctly rounded summation and the final average runs over
days sorted by date; results do not depend on input order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Sequence

import numpy as np

from eppsdecomp import _backend
from eppsdecomp.tickstore import DataWarning, PriceGrid, TickSeries, build_grids

__all__ = [
    "EstimationError",
    "ReturnSeries",
    "EppsCurve",
    "quantized_log",
    "log_returns",
    "return_days",
    "time_average",
    "lagged_cross_correlation",
    "day_correlations",
    "epps_curve",
    "asymptotic_value",
    "scale_curve",
    "characteristic_time",
    "lead_lag_peak",
    "null_bound",
    "bootstrap_stderr",
    "parse_grid",
    "write_curve_csv",
    "read_curve_csv",
    "write_lagged_csv",
]

DEFAULT_GRID = "60:9000:60"
DEFAULT_WINDOW = (6000, 9000)
# log-prices live on a 2**-40 lattice: differences and their partial sums are
# exact in float64, so coarse returns equal sums of fine returns bit for bit
_LATTICE = 2.0**40


class EstimationError(ValueError):
    """A statistic cannot be formed from the data supplied."""


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log-returns over horizon ``dt`` sampled every ``step`` seconds.

    ``values[k]`` is the return over ``(t_k - dt, t_k]`` with
    ``t_k = t_start + k * step``.
    """

    dt: int
    t_start: int
    values: np.ndarray = field(repr=False)
    step: int = 0
    date: str = ""
    symbol: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.step == 0:
            object.__setattr__(self, "step", self.dt)
        if self.dt <= 0 or self.step <= 0:
            raise ValueError("dt and step must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.values.size, dtype=np.int64)

    def __len__(self):
        return int(self.values.size)


@dataclass(eq=False)
class EppsCurve:
    pair: tuple[str, str]
    grid: np.ndarray
    rho: np.ndarray
    provenance: str = "measured"
    asymptotic: float | None = None
    n_days: int = 0
    window: tuple[float, float] = DEFAULT_WINDOW
    # optional per-day detail kept for bootstrap errors: shape (n_days, len(grid))
    per_day: np.ndarray | None = field(default=None, repr=False)
    dates: tuple[str, ...] = ()
    n_samples: np.ndarray | None = field(default=None, repr=False)
    stderr: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid)
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.shape != self.rho.shape:
            raise ValueError("grid and rho must be 1-d and of equal length")
        if self.grid.size > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.provenance not in ("measured", "predicted"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return int(self.grid.size)


# ---------------------------------------------------------------------------
# returns


def quantized_log(prices) -> np.ndarray:
    """Natural log of ``prices`` rounded to the nearest multiple of 2**-40."""
    return np.round(np.log(np.asarray(prices, dtype=np.float64)) * _LATTICE) / _LATTICE


def log_returns(grid: PriceGrid, dt: int) -> ReturnSeries:
    """Overlapping log-returns over ``dt`` at every grid point of one day."""
    if dt <= 0 or dt % grid.dt0:
        raise ValueError(f"dt={dt} is not a positive multiple of dt0={grid.dt0}")
    m = dt // grid.dt0
    if m >= len(grid):
        values = np.empty(0)
    else:
        lp = quantized_log(grid.prices)
        values = lp[m:] - lp[:-m]
    return ReturnSeries(int(dt), grid.t_start + int(dt), values, grid.dt0, grid.date, grid.symbol)


def return_days(grids: Sequence[PriceGrid], dt: int) -> list[ReturnSeries]:
    return [log_returns(g, dt) for g in grids]


def _as_days(r) -> list[ReturnSeries]:
    if isinstance(r, ReturnSeries):
        return [r]
    days = sorted(r, key=lambda d: d.date)
    for prev, cur in zip(days, days[1:]):
        if prev.date == cur.date:
            raise ValueError(f"duplicate day {cur.date!r}")
    return days


def _aligned_days(ra, rb):
    """Pairs of same-date ReturnSeries, sorted by date."""
    ra = _as_days(ra)
    rb = {d.date: d for d in _as_days(rb)}
    return [(a, rb[a.date]) for a in ra if a.date in rb]


def _paired(a: ReturnSeries, b: ReturnSeries, tau: int):
    """Values ``a(t)`` and ``b(t + tau)`` over all t where both exist."""
    if a.step != b.step or a.dt != b.dt:
        raise ValueError("return series differ in dt or sampling step")
    s = a.step
    shift = a.t_start + tau - b.t_start
    if tau % s or shift % s:
        raise ValueError(f"lag {tau} is not aligned with the sampling step {s}")
    off = shift // s
    lo = max(0, -off)
    hi = min(len(a), len(b) - off)
    if hi <= lo:
        return a.values[:0], b.values[:0]
    return a.values[lo:hi], b.values[lo + off : hi + off]


def time_average(values) -> float:
    """Arithmetic mean by correctly rounded summation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EstimationError("time average of an empty sequence")
    return _backend.exact_sum(values) / values.size


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Mean-subtracted, sigma-normalised correlation of paired samples; nan if a sigma is 0."""
    n = x.size
    if n < 2:
        return math.nan
    xc = x - _backend.exact_sum(x) / n
    yc = y - _backend.exact_sum(y) / n
    _, _, sxx, syy, sxy = _backend.pair_moments(xc, yc)
    if sxx <= 0.0 or syy <= 0.0:
        return math.nan
    return sxy / math.sqrt(sxx * syy)


def day_correlations(ra, rb, tau: int = 0):
    """Per-day lagged correlations: ``(dates, values)``; unusable days are nan."""
    pairs = _aligned_days(ra, rb)
    dates = tuple(a.date for a, _ in pairs)
    values = np.array([_pearson(*_paired(a, b, tau)) for a, b in pairs], dtype=np.float64)
    return dates, values


def _day_mean(values: np.ndarray, dates, what: str) -> float:
    ok = np.isfinite(values)
    skipped = [d for d, k in zip(dates, ok) if not k]
    if skipped:
        warnings.warn(
            f"{what}: skipped {len(skipped)} day(s) with zero variance or too few pairs",
            DataWarning,
            stacklevel=3,
        )
    if not ok.any():
        raise EstimationError(f"{what}: no usable days")
    return _backend.exact_sum(values[ok]) / int(ok.sum())


def lagged_cross_correlation(ra, rb, tau: int = 0) -> float:
    """Day-averaged correlation between ``ra(t)`` and ``rb(t + tau)``.

    ``ra`` and ``rb`` are single :class:`ReturnSeries` or per-day lists of
    them; days are matched by date. Each day's coefficient uses only the
    pairs where both returns exist, with means and standard deviations taken
    over those same pairs.
    """
    dates, values = day_correlations(ra, rb, tau)
    if not dates:
        raise EstimationError("no common days")
    return _day_mean(values, dates, f"correlation at tau={tau}")


def null_bound(n_samples) -> np.ndarray | float:
    """Three-sigma band ``3 / sqrt(N)`` for a correlation under independence."""
    return 3.0 / np.sqrt(n_samples)


# ---------------------------------------------------------------------------
# Epps curve


def parse_grid(spec: str) -> np.ndarray:
    """``"start:stop:step"`` (stop inclusive) or a comma list into an int array."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (int(p) for p in parts)
        if start <= 0 or step <= 0 or stop < start:
            raise ValueError(f"invalid grid {spec!r}")
        return np.arange(start, stop + 1, step, dtype=np.int64)
    values = np.array([int(p) for p in spec.split(",") if p.strip()], dtype=np.int64)
    if values.size == 0 or np.any(values <= 0) or np.any(np.diff(values) <= 0):
        raise ValueError(f"invalid grid {spec!r}")
    return values


def epps_curve(A: TickSeries, B: TickSeries, grid, base: int | None = None) -> EppsCurve:
    """Measured equal-time correlation for every sampling scale in ``grid``.

    Prices are resampled every ``base`` seconds (default: the gcd of the grid)
    and returns are taken at every base point, so windows overlap.
    """
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise ValueError("grid must be a non-empty list of positive scales")
    if base is None:
        base = int(reduce(math.gcd, grid.tolist()))
    if np.any(grid % base):
        raise ValueError(f"grid values must be multiples of the base spacing {base}")
    ga = {g.date: g for g in build_grids(A, base)}
    gb = {g.date: g for g in build_grids(B, base)}
    dates = sorted(set(ga) & set(gb))
    if not dates:
        raise EstimationError(f"no common days between {A.symbol} and {B.symbol}")
    per_day = np.full((len(dates), grid.size), np.nan)
    n_samples = np.zeros(grid.size, dtype=np.int64)
    for i, date in enumerate(dates):
        a_grid, b_grid = ga[date], gb[date]
        for j, dt in enumerate(grid.tolist()):
            ra = log_returns(a_grid, dt)
            rb = log_returns(b_grid, dt)
            x, y = _paired(ra, rb, 0)
            per_day[i, j] = _pearson(x, y)
            n = dt // base
            if x.size:
                n_samples[j] += (x.size + n - 1) // n
    rho = np.empty(grid.size)
    for j, dt in enumerate(grid.tolist()):
        rho[j] = _day_mean(per_day[:, j], dates, f"rho at dt={dt}")
    return EppsCurve(
        (A.symbol, B.symbol),
        grid,
        rho,
        "measured",
        n_days=len(dates),
        per_day=per_day,
        dates=tuple(dates),
        n_samples=n_samples,
    )


def _window_mask(grid, window):
    lo, hi = window
    return (grid >= lo) & (grid <= hi)


def asymptotic_value(curve: EppsCurve, window=DEFAULT_WINDOW) -> float:
    """Mean correlation over the scales inside the closed ``window``; stored on the curve."""
    mask = _window_mask(curve.grid, window)
    if not mask.any():
        raise EstimationError(f"no grid points inside the window {tuple(window)}")
    value = _backend.exact_sum(curve.rho[mask]) / int(mask.sum())
    curve.asymptotic = value
    curve.window = (window[0], window[1])
    return value


def scale_curve(curve: EppsCurve) -> EppsCurve:
    """Divide the curve by its asymptotic value."""
    if curve.asymptotic is None:
        raise EstimationError("curve has no asymptotic value; call asymptotic_value first")
    a = curve.asymptotic
    if a == 0:
        raise EstimationError("cannot scale by a zero asymptotic value")
    return replace(
        curve,
        rho=curve.rho / a,
        asymptotic=a / a,
        per_day=None if curve.per_day is None else curve.per_day / a,
        stderr=None if curve.stderr is None else curve.stderr / abs(a),
    )


def characteristic_time(curve: EppsCurve) -> float:
    """First scale at which the curve reaches ``1 - 1/e`` of its asymptotic value.

    Linear interpolation between the bracketing grid points; if the first
    point is already above the level, that scale is returned.
    """
    if curve.asymptotic is None or curve.asymptotic == 0:
        raise EstimationError("characteristic time needs a nonzero asymptotic value")
    level = 1.0 - math.exp(-1.0)
    ratio = curve.rho / curve.asymptotic
    above = np.nonzero(ratio >= level)[0]
    if above.size == 0:
        raise EstimationError("curve never reaches 1 - 1/e of its asymptotic value")
    i = int(above[0])
    g = curve.grid.astype(np.float64)
    if i == 0:
        return float(g[0])
    r0, r1 = ratio[i - 1], ratio[i]
    return float(g[i - 1] + (level - r0) * (g[i] - g[i - 1]) / (r1 - r0))


def lead_lag_peak(ra, rb, dt: int, tau_range) -> tuple[int, float]:
    """Lag in ``tau_range = (-T, T)`` (step ``dt``) maximising the lagged correlation.

    Ties go to the smaller ``|tau|``, then to the negative lag.
    """
    lo, hi = (int(v) for v in tau_range)
    if lo != -hi or hi < 0 or hi % dt:
        raise ValueError("tau range must be symmetric around 0 and a multiple of dt")
    taus = list(range(lo, hi + 1, dt))
    return pick_peak(taus, [lagged_cross_correlation(ra, rb, tau) for tau in taus])


def pick_peak(taus, values) -> tuple[int, float]:
    value, tau = min(zip(values, taus), key=lambda s: (-s[0], abs(s[1]), s[1]))
    return int(tau), float(value)


def bootstrap_stderr(
    per_day: np.ndarray,
    n_boot: int = 500,
    seed: int = 0,
    statistic=None,
) -> np.ndarray:
    """Day-block bootstrap standard error of a day-averaged statistic.

    ``per_day`` has one row per day. Rows are resampled with replacement; the
    replicate statistic is ``statistic(column_means)`` (identity by default),
    so derived quantities such as scaled curves or model discrepancies can
    be bootstrapped jointly.
    """
    per_day = np.asarray(per_day, dtype=np.float64)
    if per_day.ndim == 1:
        per_day = per_day[:, None]
    n = per_day.shape[0]
    if n < 2:
        raise EstimationError("bootstrap needs at least two days")
    rng = np.random.Generator(np.random.Philox(seed))
    reps = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, size=n)
        means = np.nanmean(per_day[idx], axis=0)
        reps.append(means if statistic is None else statistic(means))
    return np.std(np.asarray(reps), axis=0, ddof=1)


# ---------------------------------------------------------------------------
# CSV output


def _num(x) -> str:
    return format(float(x), ".17g")


def write_curve_csv(curve: EppsCurve, path, summary: dict | None = None) -> None:
    """``dt_seconds,rho,provenance`` rows; ``summary`` goes on a trailing ``#`` line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dt_seconds,rho,provenance\n")
        for dt, r in zip(curve.grid.tolist(), curve.rho.tolist()):
            fh.write(f"{dt},{_num(r)},{curve.provenance}\n")
        if summary:
            fh.write("# " + ",".join(f"{k}={_num(v)}" for k, v in summary.items()) + "\n")


def read_curve_csv(path) -> EppsCurve:
    grid, rho, prov = [], [], set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("dt_seconds"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:line {line_no}: expected dt_seconds,rho,provenance")
            try:
                grid.append(int(float(parts[0])))
                rho.append(float(parts[1]))
            except ValueError:
                raise ValueError(f"{path}:line {line_no}: cannot parse {line!r}") from None
            prov.add(parts[2].strip())
    if not grid:
        raise EstimationError(f"{path}: empty curve file")
    if len(prov) != 1:
        raise ValueError(f"{path}: mixed provenance {sorted(prov)}")
    return EppsCurve(("", ""), np.array(grid), np.array(rho), prov.pop())


def write_lagged_csv(taus, values, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau_seconds,value\n")
        for tau, v in zip(taus, values):
            fh.write(f"{int(tau)},{_num(v)}\n")
