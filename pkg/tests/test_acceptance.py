"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict before asserting, so the summary at the
end of a pytest run (or ``python3 tests/test_acceptance.py``) lists every
criterion whether it passed or not.  Tolerances are the stated ones; a red
line here is a real miss, not a flaky test.
"""
import io
from functools import lru_cache

import numpy as np
from scipy import stats

from weblogdyn import (
    DEFAULT_TZ_OFFSET,
    EventStore,
    QueueConfig,
    TimeGrid,
    autocorrelation,
    compare_window_slopes,
    daily_series,
    day_of_week_profile,
    delta_curve,
    exponent_sweep,
    fit_slope,
    hourly_profile,
    ingest_files,
    lifetime_series,
    log_bin,
    normalize_and_filter,
    simulate,
    simulate_naive,
    tau_c,
    tau_v,
    windowed_distributions,
)
from weblogdyn.ingest import DEFAULT_EXTENSIONS, UrlFilter, store_bytes
from weblogdyn.prefattach import CURVATURE_THRESHOLD
from weblogdyn.synthgen import GapSpec, GeneratorSpec, KernelSpec, UrlCohort, VolumeSpec, emit_ncsa, generate

import conftest

FIT_RANGE = (2, 1e3)
INSET = QueueConfig(L=100, p=0.99999, nu=3, steps=10**7, seed=1)


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def queue_slope(nu):
    cfg = QueueConfig(INSET.L, INSET.p, nu, INSET.steps, INSET.seed)
    return fit_slope(log_bin(simulate(cfg).expand(), discrete=True), FIT_RANGE)


@lru_cache(maxsize=None)
def sweep():
    return exponent_sweep(INSET, [3, 4, 5], fit_range=FIT_RANGE)


def test_criterion_01_nu_variant_exponent():
    fit = queue_slope(3)
    record(1, abs(fit.slope + 1.25) <= 0.1,
           f"nu=3 slope {fit.slope:.3f} +- {fit.stderr:.3f} over {FIT_RANGE}, target -1.25 +- 0.1")


def test_criterion_02_original_model_and_sweep():
    one = queue_slope(1)
    ok_one = abs(one.slope + 1.0) <= 0.15
    sw = {nu: f.slope for nu, f in sweep().items()}
    ok_sweep = all(abs(s + 1.25) <= 0.1 for s in sw.values())
    shown = ", ".join(f"nu={k}: {v:.3f}" for k, v in sw.items())
    record(2, ok_one and ok_sweep,
           f"nu=1 slope {one.slope:.3f} ({'ok' if ok_one else 'miss'} vs -1.0 +- 0.15); "
           f"sweep {shown} ({'ok' if ok_sweep else 'miss'} vs -1.25 +- 0.1)")


def test_criterion_03_fast_matches_naive():
    rng = np.random.default_rng(2024)
    bad = []
    configs = []
    for _ in range(100):
        L = int(rng.integers(1, 21))
        p = float(rng.choice([0.0, 1.0, rng.random()], p=[0.1, 0.1, 0.8]))
        configs.append(QueueConfig(L, p, int(rng.integers(1, L + 1)), int(rng.integers(1, 1001)),
                                   int(rng.integers(0, 2**63))))
    configs.append(QueueConfig(INSET.L, INSET.p, INSET.nu, 10**4, INSET.seed))
    for cfg in configs:
        if simulate(cfg) != simulate_naive(cfg):
            bad.append(cfg)
    record(3, not bad, f"{len(configs) - len(bad)}/{len(configs)} configs bit-identical")


def test_criterion_04_analytic_limits():
    s = simulate(QueueConfig(L=10, p=0.0, nu=1, steps=10**6, seed=3))
    counts = dict(zip(s.values.tolist(), s.counts.tolist()))
    t = np.arange(1, 51)
    obs = np.array([counts.get(int(k), 0) for k in t] + [s.n - sum(counts.get(int(k), 0) for k in t)])
    pmf = 0.1 * 0.9 ** (t - 1)
    exp = s.n * np.r_[pmf, 1 - pmf.sum()]
    pval = stats.chisquare(obs, exp).pvalue
    sole = simulate(QueueConfig(L=1, p=1.0, nu=1, steps=10**4))
    ok_sole = sole.values.tolist() == [1]
    record(4, pval > 0.01 and ok_sole,
           f"chi-square p={pval:.3f} vs Geometric(1/10) (need > 0.01); L=1 waits all 1: {ok_sole}")


def planted_gaps(kind, exponent, seed):
    spec = GeneratorSpec(n_days=1, seed=seed, gaps=GapSpec(kind=kind, exponent=exponent,
                                                           tau_min=1, tau_max=10**4))
    return generate(spec)[0]


def test_criterion_05_inter_event_exponents():
    v = tau_v(planted_gaps("visit", 1.0, 5))
    c = tau_c(planted_gaps("click", 1.25, 6))
    fv, fc = fit_slope(v.histogram()), fit_slope(c.histogram())
    ok = abs(fv.slope + 1.0) <= 0.1 and abs(fc.slope + 1.25) <= 0.1
    record(5, ok and min(len(v), len(c)) >= 10**6,
           f"tau_v slope {fv.slope:.3f} (planted -1.0, n={len(v)}); "
           f"tau_c slope {fc.slope:.3f} (planted -1.25, n={len(c)})")


def test_criterion_06_preferential_attachment():
    lin = delta_curve(generate(GeneratorSpec(n_days=60, seed=1,
                                             kernel=KernelSpec(n_pairs=10_000, A=0.1, B=0.5)))[0], "w")
    sq = delta_curve(generate(GeneratorSpec(n_days=60, seed=1,
                                            kernel=KernelSpec(n_pairs=10_000, A=0.5, B=0.5, form="sqrt")))[0], "w")
    ok_a, ok_b = abs(lin.A - 0.1) <= 0.01, abs(lin.B - 0.5) <= 0.125
    ok_sq = abs(sq.curvature) > CURVATURE_THRESHOLD
    record(6, ok_a and ok_b and ok_sq,
           f"linear A={lin.A:.4f} B={lin.B:.4f} (curvature {lin.curvature:.2f}); "
           f"sqrt curvature {sq.curvature:.2f} vs threshold {CURVATURE_THRESHOLD}")


def test_criterion_07_window_effect():
    stationary = generate(GeneratorSpec(n_days=28, seed=3, volume=VolumeSpec(
        base_per_day=30_000, n_users=20_000, user_exponent=2.2, n_urls=10**8)))[0]
    aging = generate(GeneratorSpec(n_days=112, seed=3, volume=VolumeSpec(
        base_per_day=20_000, n_users=10**7, n_urls=20_000, url_exponent=2.2, url_lifetime=30)))[0]
    s = compare_window_slopes(windowed_distributions(stationary, "k_ip"))
    a = compare_window_slopes(windowed_distributions(aging, "k_url"))
    ok_s = abs(s.difference) <= s.combined_stderr
    ok_a = abs(a.z) > 3
    ok_g = abs(s.full.slope + 1.2) <= 0.1
    record(7, ok_s and ok_a and ok_g,
           f"stationary k_IP weekly {s.weekly.slope:.3f} full {s.full.slope:.3f} z={s.z:.2f} "
           f"({'ok' if ok_s else 'miss'}); aging k_URL z={a.z:.2f} ({'ok' if ok_a else 'miss'}, need > 3); "
           f"gamma slope {s.full.slope:.3f} ({'ok' if ok_g else 'miss'} vs -1.2 +- 0.1)")


def _conserved(store, grid):
    total = int(daily_series(store, grid).counts.sum())
    hourly = sum(p.total for p in hourly_profile(store, grid).values())
    return total == hourly == len(store)


def test_criterion_08_temporal_stats():
    base = conftest.store_of(conftest.random_events(7), (conftest.T0, conftest.T0 + 21 * 86400 - 1))
    stores = [(base, TimeGrid.for_store(base, conftest.TZ))]

    d = np.arange(7)
    weekly = tuple(1 + 0.6 * np.sin(2 * np.pi * d / 7))
    spec = GeneratorSpec(n_days=84, seed=8, weekly_weights=weekly, volume=VolumeSpec(base_per_day=3000))
    wave = generate(spec)[0]
    stores.append((wave, TimeGrid.for_store(wave, spec.tz_offset)))
    acf = autocorrelation(daily_series(*stores[-1]).counts, 14)
    peak = int(np.argmax(acf[1:10])) + 1

    hourly = np.full(24, 0.2)
    hourly[8:18] = 1.0
    hourly[11:14] = 0.55
    spec = GeneratorSpec(n_days=28, seed=9, hourly_weights=tuple(hourly), volume=VolumeSpec(base_per_day=5000))
    dip = generate(spec)[0]
    stores.append((dip, TimeGrid.for_store(dip, spec.tz_offset)))
    prof = hourly_profile(*stores[-1])["weekday"].mean
    day_min = 8 + int(np.argmin(prof[8:18]))

    conserved = all(_conserved(s, g) for s, g in stores)
    record(8, conserved and peak == 7 and 11 <= day_min <= 13,
           f"conservation {conserved}; autocorrelation peak lag {peak}; daytime minimum at hour {day_min}")


def test_criterion_09_lifetime_peaks():
    spec = GeneratorSpec(n_days=292, seed=4, volume=VolumeSpec(base_per_day=200, n_users=300, n_urls=300),
                         cohorts=[UrlCohort(n_urls=1000, birth_day=140, death_day=260)])
    store = generate(spec)[0]
    ls = lifetime_series(store, TimeGrid.for_store(store, spec.tz_offset))
    birth, death = int(np.argmax(ls.first_seen)), int(np.argmax(ls.last_seen))
    n = len(np.unique(store.urls))
    ok_sum = ls.first_seen.sum() == ls.last_seen.sum() == n
    record(9, birth == 140 and death == 260 and ok_sum,
           f"birth peak day {birth} (140), death peak day {death} (260), sums equal distinct URLs: {ok_sum}")


def _stats(store):
    grid = TimeGrid.for_store(store, DEFAULT_TZ_OFFSET)
    series = daily_series(store, grid)
    hp = hourly_profile(store, grid)
    dow = day_of_week_profile(series)
    out = {
        "daily": series.counts.tolist(),
        "hourly": [hp[k].mean.tolist() for k in sorted(hp)],
        "dow": (dow.mean.tolist(), dow.sigma.tolist()),
        "tau_v": tau_v(store).histogram().counts.tolist(),
        "tau_c": tau_c(store).histogram().counts.tolist(),
    }
    for target in ("k_ip", "k_url", "w"):
        c = delta_curve(store, target, grid, min_samples=1)
        out[f"pref_{target}"] = (c.n.tolist(), c.mean_dx.tolist(), c.zero_n)
        w = windowed_distributions(store, target, grid)
        out[f"win_{target}"] = (w.x.tolist(), w.c_weekly.tolist(), w.full.c.tolist())
    ls = lifetime_series(store, grid)
    out["lifetime"] = (ls.first_seen.tolist(), ls.last_seen.tolist())
    return out


def _via_text(store, tmp_path, name):
    buf = io.StringIO()
    emit_ncsa(store, buf, noise=0.05, seed=2)
    p = tmp_path / name
    p.write_text(buf.getvalue())
    text, _ = ingest_files([p])
    return text


def test_criterion_10_ingestion(tmp_path):
    spec = GeneratorSpec(n_days=21, seed=10, volume=VolumeSpec(base_per_day=2000, n_users=300, n_urls=500),
                         gaps=GapSpec(kind="click", exponent=1.25, n_streams=40, events_per_stream=300))
    direct = generate(spec)[0]
    a, b = _via_text(direct, tmp_path, "a.log"), _via_text(direct, tmp_path, "b.log")
    deterministic = store_bytes(a) == store_bytes(b)

    accepted = {e for e in DEFAULT_EXTENSIONS if normalize_and_filter(f"/x/page.{e}") is not None}
    others = ["gif", "jpg", "jpeg", "png", "css", "js", "pdf", "ico", "xml", "cgi", "pl", "htmlx", "tx", ""]
    leaked = [e for e in others if normalize_and_filter(f"/x/page.{e}") is not None]
    expected = {"html", "htm", "shtml", "shtm", "cfm", "php", "asp", "aspx", "jsp", "txt"}
    ok_filter = accepted == expected == set(UrlFilter().accepted_extensions) and not leaked

    # the text form does not carry the observation span, so use the direct one
    text = EventStore(a.users, a.urls, a.times, direct.span)
    sd, st = _stats(direct), _stats(text)
    differ = [k for k in sd if sd[k] != st[k]]
    record(10, deterministic and ok_filter and not differ,
           f"rerun bit-identical {deterministic}; filter admits exactly {sorted(expected)}: {ok_filter}; "
           f"statistics differing between text and direct paths: {differ or 'none'}")


if __name__ == "__main__":
    import pathlib
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(pathlib.Path(d))
                else:
                    fn()
            except AssertionError:
                pass
    print()
    for k in sorted(conftest.ACCEPTANCE_LINES):
        print(conftest.ACCEPTANCE_LINES[k])
