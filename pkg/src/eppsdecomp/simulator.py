"""Asynchronously sampled random-walk prices with a known Epps curve.

A core walk ``W`` takes one fair +-1 step per time unit. Each of two price
series copies ``W`` at its own tick times, which advance by independent
exponential waiting times rounded up to whole steps, and holds the price
between ticks. Rounding up an exponential draw gives a geometric waiting
time, so each step independently carries a tick with probability
``1 - exp(-lambda)``.

Random numbers come from numpy's counter-based Philox generator keyed by
``numpy.random.SeedSequence(seed)``; identical seeds reproduce identical
output on every platform numpy supports.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field

import numpy as np

from eppsdecomp.decomposition import DecayFunction, triangular_sum
from eppsdecomp.tickstore import TickSeries, TradingDay

__all__ = [
    "SimulationError",
    "SimConfig",
    "CoreWalk",
    "generate_core_walk",
    "sample_walk",
    "simulate_pair",
    "simulate_delayed_response_pair",
    "analytic_decay",
    "analytic_decay_function",
    "model_predict",
]

DAY_LENGTH = 23_400
_EPOCH = _dt.date(2000, 1, 1)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    T: int
    lam: float
    seed: int = 0
    w0: int | None = None
    day_length: int = DAY_LENGTH

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise SimulationError(f"T must be a positive integer, got {self.T}")
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise SimulationError(f"lambda must be positive, got {self.lam}")
        if self.day_length < 1:
            raise SimulationError("day_length must be positive")
        if self.w0 is not None and self.w0 < 1:
            raise SimulationError("w0 must be a positive integer")


@dataclass(frozen=True, eq=False)
class CoreWalk:
    """Unit-step walk ``W(t) = w0 + sum(steps[:t])`` for ``t = 0..T``."""

    T: int
    w0: int
    steps: np.ndarray = field(repr=False)

    @property
    def levels(self) -> np.ndarray:
        out = np.empty(self.T + 1, dtype=np.int64)
        out[0] = self.w0
        np.cumsum(self.steps, dtype=np.int64, out=out[1:])
        out[1:] += self.w0
        return out


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _default_w0(T, unit_var=1.0):
    return int(math.ceil(10.0 * math.sqrt(T * unit_var)))


def _fit_w0(increments: np.ndarray, w0: int | None, unit_var=1.0) -> int:
    path_min = int(np.cumsum(increments, dtype=np.int64).min()) if increments.size else 0
    if w0 is not None:
        if w0 + path_min <= 0:
            first = int(np.argmax(w0 + np.cumsum(increments, dtype=np.int64) <= 0)) + 1
            raise SimulationError(f"w0={w0} too small: walk reaches {w0 + path_min} first at t={first}")
        return int(w0)
    w0 = _default_w0(increments.size, unit_var)
    while w0 + path_min <= 0:
        w0 *= 2
    return w0


def generate_core_walk(config: SimConfig, seed=None) -> CoreWalk:
    """Fair +-1 walk of ``config.T`` steps.

    With ``config.w0`` unset the start level is ``ceil(10*sqrt(T))``,
    doubled until the walk stays positive.
    """
    rng = _rng(config.seed if seed is None else seed)
    steps = (rng.integers(0, 2, size=config.T, dtype=np.int8) * 2 - 1).astype(np.int8)
    w0 = _fit_w0(steps, config.w0)
    return CoreWalk(config.T, w0, steps)


def _tick_times(T: int, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Cumulative rounded-up exponential waiting times inside ``[1, T]``."""
    chunks = []
    last = 0
    batch = int(T * lam + 10 * math.sqrt(T * lam) + 64)
    while last < T:
        waits = np.maximum(1, np.ceil(rng.exponential(1.0 / lam, size=batch))).astype(np.int64)
        times = last + np.cumsum(waits)
        chunks.append(times)
        last = int(times[-1])
    times = np.concatenate(chunks)
    return times[times <= T]


def _split_days(symbol, times, levels, T, day_length) -> TickSeries:
    n_days = -(-T // day_length)
    day_idx = (times - 1) // day_length
    bounds = np.searchsorted(day_idx, np.arange(n_days + 1))
    days = []
    for d in range(n_days):
        lo, hi = bounds[d], bounds[d + 1]
        t = times[lo:hi] - d * day_length
        close = min(day_length, T - d * day_length)
        date = (_EPOCH + _dt.timedelta(days=d)).isoformat()
        days.append(TradingDay(date, 0, close, t, levels[times[lo:hi]].astype(np.float64)))
    return TickSeries(symbol, tuple(days))


def sample_walk(walk, lam: float, seed, symbol: str = "SIM", day_length: int = DAY_LENGTH) -> TickSeries:
    """Observe a walk at exponential waiting times.

    ``walk`` is a :class:`CoreWalk` or an integer level array ``W(0..T)``.
    Ticks fall in ``[1, T]``; the walk is cut into days of ``day_length``
    steps with tick times given as offsets from each day's start.
    """
    if not lam > 0:
        raise SimulationError(f"lambda must be positive, got {lam}")
    levels = walk.levels if isinstance(walk, CoreWalk) else np.asarray(walk, dtype=np.int64)
    T = levels.size - 1
    times = _tick_times(T, lam, _rng(seed))
    return _split_days(symbol, times, levels, T, day_length)


def simulate_pair(config: SimConfig, symbols=("SIM_A", "SIM_B")) -> tuple[TickSeries, TickSeries]:
    """One core walk sampled twice with independent waiting times."""
    walk_seed, a_seed, b_seed = np.random.SeedSequence(config.seed).spawn(3)
    walk = generate_core_walk(config, seed=walk_seed)
    a = sample_walk(walk, config.lam, a_seed, symbols[0], config.day_length)
    b = sample_walk(walk, config.lam, b_seed, symbols[1], config.day_length)
    return a, b


def simulate_delayed_response_pair(
    config: SimConfig, response_rate: float, symbols=("SIM_A", "SIM_B")
) -> tuple[TickSeries, TickSeries]:
    """Two walks sharing delayed common shocks, each sampled asynchronously.

    Every step emits a common +-1 shock, absorbed by each walk after an
    independent geometric delay with mean about ``1/response_rate``, plus one
    idiosyncratic +-1 step per walk. The unsampled increments then have an
    exponential, symmetric cross-decay in the lag with rate ``response_rate``
    regardless of the tick rate, and an asymptotic correlation of 1/2.
    """
    if not response_rate > 0:
        raise SimulationError("response_rate must be positive")
    T = config.T
    s_common, s_da, s_db, s_ia, s_ib, s_a, s_b = np.random.SeedSequence(config.seed).spawn(7)
    common = _rng(s_common).integers(0, 2, size=T, dtype=np.int8) * 2 - 1
    shock_time = np.arange(1, T + 1, dtype=np.int64)
    levels = []
    for s_delay, s_idio in ((s_da, s_ia), (s_db, s_ib)):
        delay = np.floor(_rng(s_delay).exponential(1.0 / response_rate, size=T)).astype(np.int64)
        arrive = shock_time + delay
        ok = arrive <= T
        inc = np.bincount(arrive[ok], weights=common[ok], minlength=T + 1)[1:].astype(np.int64)
        inc += _rng(s_idio).integers(0, 2, size=T, dtype=np.int64) * 2 - 1
        w0 = _fit_w0(inc, config.w0, unit_var=2.0)
        lv = np.empty(T + 1, dtype=np.int64)
        lv[0] = w0
        lv[1:] = w0 + np.cumsum(inc)
        levels.append(lv)
    a = sample_walk(levels[0], config.lam, s_a, symbols[0], config.day_length)
    b = sample_walk(levels[1], config.lam, s_b, symbols[1], config.day_length)
    return a, b


def analytic_decay(lam: float, dt0: int, x):
    """Cross decay ``exp(-lam * dt0 * |x|)`` of the sampled-walk model."""
    return np.exp(-lam * dt0 * np.abs(x))


def analytic_decay_function(lam: float, dt0: int, max_lag: int) -> DecayFunction:
    x = np.arange(-max_lag, max_lag + 1)
    return DecayFunction(dt0, "cross", analytic_decay(lam, dt0, x))


def model_predict(rho0: float, lam: float, dt0: int, dt: int) -> float:
    """Model Epps curve: base correlation times the averaged triangular decay sum.

    Equivalent to the general prediction with the analytic cross decay and
    delta auto decays, and evaluated with the same arithmetic.
    """
    if dt <= 0 or dt % dt0:
        raise ValueError(f"dt={dt} is not a positive multiple of dt0={dt0}")
    n = dt // dt0
    s = triangular_sum(analytic_decay_function(lam, dt0, n - 1), n)
    return s / math.sqrt(float(n) * float(n)) * rho0
