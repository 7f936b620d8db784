import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_return_days
from eppsdecomp import correlator as C
from eppsdecomp import decomposition as D
from eppsdecomp.correlator import EppsCurve, EstimationError, ReturnSeries
from eppsdecomp.decomposition import DecayFunction, DecompositionInput
from eppsdecomp.simulator import SimConfig, simulate_pair
from eppsdecomp.tickstore import DataWarning, PriceGrid, build_grids
from oracles import product_average_direct


def rs(values, dt=1, t_start=0, date=""):
    return ReturnSeries(dt, t_start, np.asarray(values, dtype=float), date=date)


def symmetric(positive, kind="cross", dt0=1):
    """Decay function with ``raw[x] = raw[-x] = positive[|x|]`` (positive[0] is lag 0)."""
    positive = list(positive)
    return DecayFunction(dt0, kind, positive[:0:-1] + positive)


def curve(rho, grid=None, provenance="measured"):
    rho = np.asarray(rho, dtype=float)
    g = np.arange(1, rho.size + 1) * 120 if grid is None else grid
    return EppsCurve(("A", "B"), g, rho, provenance)


# -- product averages ---------------------------------------------------------


def test_product_average_examples():
    assert D.product_average(rs([1, 1, 1]), rs([1, 1, 1]), 0) == 1.0
    assert D.product_average(rs([1, 0]), rs([0, 1]), 1) == 1.0


def test_product_average_no_pairs():
    with pytest.raises(EstimationError):
        D.product_average(rs([1, 0]), rs([0, 1]), 5)


def test_product_average_matches_double_loop(rng):
    a = random_return_days(rng, 3, 200, dt=30)
    b = random_return_days(rng, 3, 200, dt=30)
    for x in (-3, 0, 1, 4):
        assert D.product_average(a, b, x) == pytest.approx(product_average_direct(a, b, x), abs=1e-12)


def test_aggregate_equals_coarse_log_returns(rng):
    p = 100 * np.exp(np.cumsum(rng.normal(size=3000) * 1e-3))
    g = PriceGrid("X", "d", 120, 0, p)
    base = C.log_returns(g, 120)
    for k in (1, 2, 7, 50):
        agg = D.aggregate_returns(base, k)
        coarse = C.log_returns(g, 120 * k)
        assert agg.t_start == coarse.t_start and agg.dt == coarse.dt
        assert np.array_equal(agg.values, coarse.values)


# -- decay estimation ---------------------------------------------------------


def test_self_decay_normalised(rng):
    r = rs(rng.normal(size=1000))
    f = D.estimate_decay(r, r, 5)
    assert f.kind == "auto"
    assert f.at(0) == 1.0


def test_zero_denominator():
    z = rs(np.zeros(10))
    with pytest.raises(EstimationError):
        D.estimate_decay(z, z, 2)


def test_iid_auto_decay_null(rng):
    n = 50_000
    r = rs(rng.choice([-1.0, 1.0], size=n))
    f = D.estimate_decay(r, r, 10)
    off = np.delete(f.raw, f.max_lag)
    assert np.all(np.abs(off) < C.null_bound(n - 10))


@pytest.fixture(scope="module")
def sim_base():
    lam = 1 / 60
    a, b = simulate_pair(SimConfig(23_400 * 100, lam, seed=21))
    ga = build_grids(a, 1)
    gb = build_grids(b, 1)
    return lam, C.return_days(ga, 1), C.return_days(gb, 1)


def test_simulated_cross_decay_is_exponential(sim_base):
    lam, ra, rb = sim_base
    n = sum(len(d) for d in ra)
    aa = D.product_average(ra, ra, 0)
    bb = D.product_average(rb, rb, 0)
    p0 = D.product_average(ra, rb, 0)
    se = math.sqrt(aa * bb / n)
    for x in (-120, -30, -5, 1, 10, 60, 150):
        px = D.product_average(ra, rb, x)
        expected = p0 * math.exp(-lam * abs(x))
        assert abs(px - expected) < 4 * se * (1 + math.exp(-lam * abs(x)))


def test_simulated_auto_decay_is_delta(sim_base):
    _, ra, _ = sim_base
    n = sum(len(d) for d in ra)
    f = D.truncate_auto(D.estimate_decay(ra, ra, 8))
    assert np.all(np.abs(np.delete(f.raw, 8)) < C.null_bound(n))


# -- truncation ---------------------------------------------------------------


def test_cross_all_positive_unchanged():
    f = D.truncate_cross(symmetric([1, 0.5, 0.2]))
    assert np.array_equal(f.truncated, f.raw)
    assert (f.cut_neg, f.cut_pos) == (-3, 3)


def test_cross_cut_example():
    f = D.truncate_cross(symmetric([1, 0.4, 0.1, -0.05, 0.2]))
    assert f.cut_pos == 3 and f.cut_neg == -3
    assert f.truncated[f.max_lag :].tolist() == [1, 0.4, 0.1, 0, 0]
    assert f.at(100) == 0.0


def test_cross_immediate_crossing():
    f = D.truncate_cross(DecayFunction(1, "cross", [0.3, 0.2, 1, -0.1, 0.5]))
    assert f.truncated.tolist() == [0.3, 0.2, 1, 0, 0]
    assert (f.cut_neg, f.cut_pos) == (-3, 1)


def test_auto_overshoot_example():
    f = D.truncate_auto(symmetric([1, -0.2, -0.05, 0.01, -0.3], kind="auto"))
    assert f.cut_pos == 3
    assert f.truncated[f.max_lag :].tolist() == [1, -0.2, -0.05, 0, 0]
    assert not f.fallback_pos


def test_auto_delta_like():
    f = D.truncate_auto(symmetric([1, 0, 0.1, 0.05], kind="auto"))
    assert f.truncated.tolist() == [0, 0, 0, 1, 0, 0, 0]
    assert f.fallback_pos and f.fallback_neg


def test_truncation_kind_checked():
    with pytest.raises(ValueError):
        D.truncate_auto(symmetric([1, 0.5]))
    with pytest.raises(ValueError):
        D.truncate_cross(symmetric([1, 0.5], kind="auto"))


side_values = st.lists(st.floats(-1, 1, allow_nan=False), min_size=0, max_size=12)


@settings(max_examples=200, deadline=None)
@given(pos=side_values, neg=side_values, kind=st.sampled_from(["cross", "auto"]))
def test_truncation_support_and_idempotence(pos, neg, kind):
    m = max(len(pos), len(neg))
    pos = pos + [0.0] * (m - len(pos))
    neg = neg + [0.0] * (m - len(neg))
    f = DecayFunction(1, kind, neg[::-1] + [1.0] + pos)
    trunc = D.truncate_cross if kind == "cross" else D.truncate_auto
    t = trunc(f)
    inside = (f.lags > t.cut_neg) & (f.lags < t.cut_pos)
    assert np.array_equal(t.truncated[inside], f.raw[inside])
    assert np.all(t.truncated[~inside] == 0)
    assert np.all((t.truncated == 0) | (f.raw != 0))
    again = trunc(DecayFunction(1, kind, t.truncated))
    assert np.array_equal(again.truncated, t.truncated)


# -- prediction ---------------------------------------------------------------


def delta_input(rho0, dt0=1, max_lag=0):
    return DecompositionInput(
        rho0,
        D.delta_decay(dt0, "cross", max_lag),
        D.delta_decay(dt0, "auto", max_lag),
        D.delta_decay(dt0, "auto", max_lag),
    )


@settings(max_examples=100, deadline=None)
@given(rho0=st.floats(-1, 1), n=st.integers(1, 5000), max_lag=st.integers(0, 20))
def test_delta_fixed_point(rho0, n, max_lag):
    assert abs(D.predict_correlation(delta_input(rho0, 120, max_lag), 120 * n) - rho0) <= 1e-15


def test_two_step_hand_expansion():
    fab = D.truncate_cross(symmetric([1, 0.5, 0.0]))
    inp = DecompositionInput(0.3, fab, D.delta_decay(1), D.delta_decay(1))
    assert D.predict_correlation(inp, 2) == 1.5 * 0.3


def test_bad_autocorrelation_sum_named():
    bad = D.truncate_auto(symmetric([1, -0.9, -0.9, 0.1], kind="auto"))
    inp = DecompositionInput(0.3, D.delta_decay(1, "cross"), D.delta_decay(1), bad)
    with pytest.raises(EstimationError, match="B/B"):
        D.predict_correlation(inp, 3)
    inp = DecompositionInput(0.3, D.delta_decay(1, "cross"), bad, D.delta_decay(1))
    with pytest.raises(EstimationError, match="A/A"):
        D.predict_correlation(inp, 3)


def test_untruncated_needs_lags():
    f = symmetric([1, 0.5])
    assert D.triangular_sum(f, 2) == 3.0
    with pytest.raises(ValueError):
        D.triangular_sum(f, 3)


def test_dt_not_multiple():
    with pytest.raises(ValueError):
        D.predict_correlation(delta_input(0.5, 120), 180)


def test_delta_curve_flat():
    c = D.predict_epps_curve(delta_input(0.42, 120), np.arange(120, 9001, 120))
    assert np.all(c.rho == 0.42)
    assert c.provenance == "predicted"


def test_exponential_curve_monotone_and_saturating():
    dt0, lam = 120, 1 / 600
    lags = np.arange(-200, 201)
    fab = D.truncate_cross(DecayFunction(dt0, "cross", np.exp(-lam * dt0 * np.abs(lags))))
    inp = DecompositionInput(0.2, fab, D.delta_decay(dt0), D.delta_decay(dt0))
    grid = np.arange(dt0, 200 * dt0 + 1, dt0)
    c = D.predict_epps_curve(inp, grid)
    assert c.rho[0] == 0.2
    assert np.all(np.diff(c.rho) > 0)
    limit = 0.2 * (1 + 2 * math.exp(-lam * dt0) / (1 - math.exp(-lam * dt0)))
    assert c.rho[-1] < limit
    assert np.all(np.diff(np.diff(c.rho)) < 0)


def test_exactness_without_truncation(rng):
    n_base = 40_000
    e = rng.normal(size=n_base + 3)
    ua = rng.normal(size=n_base + 3)
    ub = rng.normal(size=n_base + 3)
    a = e[1:-2] + 0.5 * e[:-3] + ua[1:-2] + 0.3 * ua[:-3]
    b = 0.8 * e[1:-2] + 0.4 * e[3:] + ub[1:-2]
    ra, rb = rs(a - a.mean()), rs(b - b.mean())
    for n in (1, 2, 5, 20):
        inp = D.build_input(ra, rb, max(n - 1, 0), truncate=False)
        direct = D.mean_free_correlation(D.aggregate_returns(ra, n), D.aggregate_returns(rb, n))
        assert D.predict_correlation(inp, n) == pytest.approx(direct, rel=0.01)


def test_scale_consistency(rng):
    n_base, n = 200_000, 4
    e = rng.normal(size=n_base + 4)
    a = e[2:-2] + 0.6 * e[:-4] + rng.normal(size=n_base)
    b = e[2:-2] + 0.5 * e[4:] + rng.normal(size=n_base)
    ra, rb = rs(a - a.mean()), rs(b - b.mean())
    direct = D.predict_correlation(D.build_input(ra, rb, 2 * n - 1, truncate=False), 2 * n)
    agg_a, agg_b = D.aggregate_returns(ra, n), D.aggregate_returns(rb, n)
    coarse = D.build_input(agg_a, agg_b, 1, truncate=False)
    assert coarse.dt0 == n
    assert D.predict_correlation(coarse, 2 * n) == pytest.approx(direct, rel=0.01)


# -- goodness -----------------------------------------------------------------


def test_goodness_example():
    s = D.goodness(curve([0.5]), curve([0.45], provenance="predicted"))
    assert s.g[0] == pytest.approx(10.0, abs=1e-12)


def test_goodness_identical():
    c = curve([0.2, 0.4, 0.5])
    s = D.goodness(c, c)
    assert s.max == s.mean == s.median == 0.0


def test_goodness_statistics():
    s = D.goodness(curve([1.0, 1.0, 1.0, 1.0]), curve([1.01, 0.97, 1.04, 1.0]))
    assert s.g == pytest.approx([1, 3, 4, 0])
    assert s.max == pytest.approx(4)
    assert s.mean == pytest.approx(2)
    assert s.median == pytest.approx(2)


def test_goodness_zero_and_negative_points():
    with pytest.warns(DataWarning):
        s = D.goodness(curve([0.0, -0.5, 0.5]), curve([0.1, -0.45, 0.5]))
    assert s.excluded == (120,)
    assert s.negative == (240,)
    assert s.dt.tolist() == [240, 360]
    assert s.g == pytest.approx([10.0, 0.0])


def test_goodness_grid_mismatch():
    with pytest.raises(ValueError):
        D.goodness(curve([0.5]), curve([0.5], grid=np.array([60])))


# -- end to end ---------------------------------------------------------------


def test_decompose_pair_small():
    a, b = simulate_pair(SimConfig(23_400 * 30, 1 / 60, seed=9))
    grid = np.arange(120, 3001, 120)
    res = D.decompose_pair(a, b, grid, 120)
    assert res.inputs.rho0 == res.measured.rho[0]
    assert res.predicted.rho[0] == res.inputs.rho0
    assert res.inputs.fAB.max_lag == 1000 // 120
    assert res.stats.mean < 10


def test_csv_writers(tmp_path):
    f = D.truncate_cross(symmetric([1, 0.5, -0.1]))
    D.write_decay_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x_lag,raw,truncated"
    assert lines[1] == "-2,-0.10000000000000001,0"
    s = D.goodness(curve([0.5, 1.0]), curve([0.45, 1.0]))
    D.write_goodness_csv(s, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "dt_seconds,g_percent"
    assert lines[-2] == "# max,mean,median"
    assert len(lines) == 5
