import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weblogdyn import (
    InsufficientData,
    PrefTarget,
    TimeGrid,
    accumulate_counts,
    compare_window_slopes,
    delta_curve,
    windowed_distributions,
)
from weblogdyn.prefattach import CURVATURE_THRESHOLD, _bin_samples, level_range
from weblogdyn.synthgen import GeneratorSpec, KernelSpec, VolumeSpec, generate

import oracles
from conftest import T0, TZ, random_events, store_of

DAY = 86400
G = TimeGrid(T0 + TZ, TZ)


@pytest.fixture(scope="module")
def linear_store():
    spec = GeneratorSpec(n_days=30, seed=2, kernel=KernelSpec(n_pairs=3000, A=0.1, B=0.5))
    return generate(spec)[0]


def test_accumulate_examples():
    s = store_of([(1, 10, T0), (1, 10, T0 + 5), (1, 11, T0 + DAY), (2, 10, T0 + 9 * DAY)])
    assert accumulate_counts(s, "k_ip", (0, 7), G) == {1: 2}
    assert accumulate_counts(s, "w", (0, 7), G) == {(1, 10): 2, (1, 11): 1}
    assert accumulate_counts(s, "k_url", (0, 10), G) == {10: 2, 11: 1}
    with pytest.raises(InsufficientData):
        accumulate_counts(s, "w", (3, 3), G)


def test_accumulate_matches_oracle_and_conserves(events, store, grid):
    for target in ("k_ip", "k_url", "w"):
        got = accumulate_counts(store, target, (2, 9), grid)
        assert got == oracles.accumulate(events, target, 2, 9, grid.day_origin, TZ)
    w = accumulate_counts(store, "w", (2, 9), grid)
    in_range = sum(1 for *_, t in events if 2 <= grid.days(t) < 9)
    assert sum(w.values()) == in_range
    n_pairs = len(w)
    assert sum(accumulate_counts(store, "k_ip", (2, 9), grid).values()) == n_pairs
    assert sum(accumulate_counts(store, "k_url", (2, 9), grid).values()) == n_pairs


@pytest.mark.parametrize("target", ["k_ip", "k_url", "w"])
@pytest.mark.parametrize("mode", ["sliding", "disjoint"])
def test_curve_bins_match_oracle_samples(target, mode):
    ev = random_events(21, n=1500, n_users=12, n_urls=30, n_days=20)
    s = store_of(ev, (T0, T0 + 20 * DAY - 1))
    curve = delta_curve(s, target, G, window=7, mode=mode, min_samples=1)
    days = range(7, 20) if mode == "sliding" else range(7, 20, 7)
    assert curve.days_used == list(days)
    samples = oracles.delta_samples(ev, target, 20, G.day_origin, TZ, days=days)
    zero = [dx for x, dx in samples if x == 0]
    assert curve.zero_n == len(zero)
    if zero:
        assert curve.zero_mean_dx == pytest.approx(np.mean(zero))
    for lo, hi, n, m in zip(curve.bin_lo, curve.bin_hi, curve.n, curve.mean_dx):
        inside = [dx for x, dx in samples if lo <= x < hi]
        assert n == len(inside) and m == pytest.approx(np.mean(inside))
    assert curve.n.sum() + curve.zero_n == len(samples)
    assert (curve.mean_dx >= 0).all()


def test_planted_linear_kernel(linear_store):
    curve = delta_curve(linear_store, PrefTarget.W)
    assert abs(curve.A - 0.1) < 0.01 and abs(curve.B - 0.5) < 0.125
    assert not curve.nonlinear and abs(curve.curvature) < CURVATURE_THRESHOLD
    assert curve.used.sum() >= 4


def test_sqrt_kernel_flagged_nonlinear():
    spec = GeneratorSpec(n_days=30, seed=2, kernel=KernelSpec(n_pairs=3000, A=0.5, B=0.5, form="sqrt"))
    curve = delta_curve(generate(spec)[0], "w")
    assert curve.nonlinear and curve.curvature < -CURVATURE_THRESHOLD


def test_duplicated_activity_keeps_slope(linear_store):
    s = linear_store
    base = delta_curve(s, "w")
    # every click repeated on a twin url: twice the pairs, same growth rule
    twin = store_of(np.c_[np.r_[s.users, s.users], np.r_[s.urls, s.urls + 10**6],
                          np.r_[s.times, s.times]].tolist(), s.span)
    # every click repeated within its pair a second later: x and dx double
    double = store_of(np.c_[np.r_[s.users, s.users], np.r_[s.urls, s.urls],
                            np.r_[s.times, s.times + 1]].tolist(), s.span)
    for other in (delta_curve(twin, "w"), delta_curve(double, "w")):
        assert abs(other.A - base.A) < 3 * np.hypot(base.stderr_A, other.stderr_A)
    assert delta_curve(double, "w").x.max() > 1.5 * base.x.max()


def test_stationary_log_is_well_posed():
    # element u clicks (u % 4 + 1) times every day
    ev = [(u, 0, T0 + d * DAY + 60 * k) for d in range(14) for u in range(40) for k in range(u % 4 + 1)]
    curve = delta_curve(store_of(ev), "w", G, min_samples=1)
    assert np.isfinite(curve.mean_dx).all()
    assert curve.x.tolist() == [7.0, 14.0, 21.0, 28.0]
    assert curve.A == pytest.approx(1 / 7) and curve.B == pytest.approx(0, abs=1e-12)


def test_too_short_span():
    s = store_of([(0, 0, T0), (0, 0, T0 + 6 * DAY)])
    with pytest.raises(InsufficientData):
        delta_curve(s, "w", G)
    with pytest.raises(ValueError):
        delta_curve(store_of(random_events(1)), "w", mode="weekly")


def test_rows_and_fit_dict(linear_store):
    curve = delta_curve(linear_store, "w")
    rows = list(curve.rows())
    assert rows[0][0] == 0.0 and len(rows) == len(curve.x) + 1
    assert set(curve.fit_dict()) >= {"A", "B", "stderrA", "stderrB"}


@given(st.integers(0, 10**6), st.sampled_from(["k_ip", "k_url", "w"]))
@settings(max_examples=12, deadline=None)
def test_curve_agrees_with_oracle_on_random_logs(seed, target):
    ev = random_events(seed, n=800, n_users=8, n_urls=15, n_days=12)
    s = store_of(ev, (T0, T0 + 12 * DAY - 1))
    samples = oracles.delta_samples(ev, target, 12, G.day_origin, TZ)
    try:
        curve = delta_curve(s, target, G, min_samples=1)
    except InsufficientData:
        xs = np.array([x for x, _ in samples if x > 0])
        assert len(_bin_samples(xs, np.zeros(len(xs)), 1.3)[0]) < 3
        return
    assert curve.n.sum() + curve.zero_n == len(samples)
    assert (curve.n * curve.mean_dx).sum() + curve.zero_n * np.nan_to_num(curve.zero_mean_dx) == pytest.approx(
        sum(dx for _, dx in samples))


def test_single_week_weekly_equals_full():
    ev = random_events(4, n=600, n_days=7)
    s = store_of(ev, (T0, T0 + 7 * DAY - 1))
    pair = windowed_distributions(s, "k_url", G)
    assert pair.n_windows == 1
    assert np.array_equal(pair.c_weekly, pair.full.c) and np.array_equal(pair.x, pair.full.x)


def test_windowed_matches_oracle(events, store, grid):
    pair = windowed_distributions(store, "k_ip", grid)
    assert pair.n_windows == 3
    weeks = [list(oracles.accumulate(events, "k_ip", 7 * k, 7 * k + 7, grid.day_origin, TZ).values())
             for k in range(3)]
    for x, c in zip(pair.x, pair.c_weekly):
        expect = np.mean([sum(v >= x for v in vals) / len(vals) for vals in weeks])
        assert c == pytest.approx(expect)
    full = list(oracles.accumulate(events, "k_ip", 0, 21, grid.day_origin, TZ).values())
    assert np.allclose(pair.full.c, oracles.ccdf(full)[1])
    rows = list(pair.rows())
    assert all(0 <= cw <= 1 and 0 <= cf <= 1 for _, cw, cf in rows)


def test_windowed_needs_a_full_week():
    s = store_of([(0, 0, T0), (0, 0, T0 + 5 * DAY)])
    with pytest.raises(InsufficientData):
        windowed_distributions(s, "w", G)


def test_level_range():
    from weblogdyn import cumulative

    cd = cumulative(np.arange(1, 101))
    assert level_range(cd) == (51.0, 91.0)


def test_stationary_slopes_agree():
    spec = GeneratorSpec(n_days=28, seed=9, volume=VolumeSpec(base_per_day=8000, n_users=5000,
                                                             user_exponent=2.2, n_urls=10**8))
    store = generate(spec)[0]
    cmp = compare_window_slopes(windowed_distributions(store, "k_ip"), n_boot=40)
    assert abs(cmp.z) < 2
    d = cmp.to_dict()
    assert d["difference"] == cmp.weekly.slope - cmp.full.slope
