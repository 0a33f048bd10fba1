import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weblogdyn import InsufficientData, cumulative, fit_cumulative, fit_mle, fit_slope, log_bin
from weblogdyn.powerlaw import LogBinnedHistogram
from weblogdyn.synthgen import discrete_power_law, power_law_weights

import oracles

positive = st.lists(st.floats(1e-3, 1e6, allow_nan=False), min_size=1, max_size=300)


def exact_hist(exponent, x_min=1.0, b=1.3, n_bins=30, scale=1.0):
    edges = x_min * b ** np.arange(n_bins + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    dens = scale * centers**-exponent
    counts = dens * np.diff(edges)
    return LogBinnedHistogram(edges, counts, dens, counts.sum(), growth=b, x_max=edges[-1])


def test_all_values_at_x_min_fill_one_bin():
    h = log_bin([2.0] * 7, x_min=2.0)
    assert np.count_nonzero(h.counts) == 1 and h.counts[0] == 7


@given(positive, st.floats(1.05, 3.0))
@settings(max_examples=60, deadline=None)
def test_conservation_and_normalization(values, b):
    h = log_bin(values, b=b)
    assert h.counts.sum() == h.total == len(values)
    assert np.all(np.diff(h.edges) > 0)
    assert abs((h.density * h.widths).sum() - 1) < 1e-9
    # every value lands in [e_i, e_i+1)
    idx = np.searchsorted(h.edges, values, side="right") - 1
    assert np.all((idx >= 0) & (idx < len(h.counts)))


@given(st.lists(st.integers(1, 5000), min_size=1, max_size=200), st.floats(1.1, 2.5))
@settings(max_examples=60, deadline=None)
def test_discrete_edges_match_oracle(values, b):
    h = log_bin(values, b=b, x_min=1, discrete=True)
    assert h.edges.tolist() == oracles.discrete_bin_edges(1, max(values), b)
    assert abs((h.density * h.widths).sum() - 1) < 1e-9


def test_non_positive_values_rejected_and_counted():
    h = log_bin([0, -3, 1, 2, 4], x_min=1)
    assert h.total == 3 and h.rejected == 2
    with pytest.raises(InsufficientData):
        log_bin([0, -1])
    with pytest.raises(ValueError):
        log_bin([1, 2], b=1.0)


def test_sampled_densities_match_analytic():
    rng = np.random.default_rng(15)
    n = 10**6
    x = power_law_weights(rng, n, 1.5)  # density 0.5 x**-1.5 on [1, inf)
    h = log_bin(x, b=1.5, x_min=1.0)
    lo, hi = h.edges[:-1], h.edges[1:]
    p = lo**-0.5 - hi**-0.5
    se = np.sqrt(n * p * (1 - p)) / (h.widths * n)
    expect = p / h.widths
    big = n * p >= 5
    assert big.sum() > 25
    assert np.all(np.abs(h.density - expect)[big] <= 3 * se[big])


@pytest.mark.parametrize("exponent", [1.0, 1.25, 2.2])
def test_exact_input_recovers_slope(exponent):
    fit = fit_slope(exact_hist(exponent))
    assert abs(fit.slope + exponent) < 1e-9
    assert fit.exponent == pytest.approx(exponent)
    assert fit.n_bins >= 4 and fit.x_range[0] < fit.x_range[1]


@given(st.floats(0.5, 3.0), st.floats(1e-6, 1e6))
@settings(max_examples=40, deadline=None)
def test_slope_invariant_under_density_scaling(exponent, c):
    a = fit_slope(exact_hist(exponent))
    b = fit_slope(exact_hist(exponent, scale=c))
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + np.log10(c), abs=1e-9)


def test_default_range_trims_edges():
    h = exact_hist(1.0, x_min=2.0, b=2.0, n_bins=10)
    lo, hi = h.default_range()
    assert lo == 8.0 and hi == h.edges[-1] / 4


def test_sampled_gamma_2_2():
    rng = np.random.default_rng(22)
    h = log_bin(power_law_weights(rng, 10**6, 2.2), x_min=1.0)
    fit = fit_slope(h)
    assert abs(fit.slope + 2.2) < 0.1
    mle = fit_mle(h, fit.x_range)
    assert abs(mle.slope + 2.2) < 0.05 and mle.stderr < 0.05


def test_discrete_mle_cross_check():
    rng = np.random.default_rng(3)
    x = discrete_power_law(rng, 500_000, 1.25, 1, 10**4)
    h = log_bin(x, x_min=1, discrete=True)
    assert abs(fit_slope(h).slope + 1.25) < 0.1
    assert abs(fit_mle(h, (2, 1e3)).slope + 1.25) < 0.05


def test_too_few_bins():
    h = log_bin([1, 1, 2, 3], x_min=1)
    with pytest.raises(InsufficientData):
        fit_slope(h, (1, 3))
    with pytest.raises(ValueError):
        fit_slope(h, (3, 1))


def test_empty_bins_skipped():
    h = exact_hist(1.5)
    h.counts[10] = 0
    fit = fit_slope(h, (1, 1e3))
    assert fit.n_bins == fit_slope(exact_hist(1.5), (1, 1e3)).n_bins - 1
    assert abs(fit.slope + 1.5) < 1e-9


def test_cumulative_example():
    cd = cumulative([1, 2, 2, 5])
    assert cd.x.tolist() == [1, 2, 5]
    assert cd.c.tolist() == [1.0, 0.75, 0.25]
    assert cd.at([0, 1, 1.5, 5, 6]).tolist() == [1.0, 1.0, 0.75, 0.25, 0.0]


def test_cumulative_constant_sample():
    cd = cumulative([3, 3, 3])
    assert cd.x.tolist() == [3] and cd.c.tolist() == [1.0]


@given(st.lists(st.integers(1, 50), min_size=1, max_size=100))
@settings(max_examples=60, deadline=None)
def test_cumulative_invariants_and_oracle(values):
    cd = cumulative(values)
    xs, cs = oracles.ccdf(values)
    assert cd.x.tolist() == xs and np.allclose(cd.c, cs)
    assert cd.c[0] == 1 and np.all(np.diff(cd.c) < 0)
    assert cd.c[-1] == values.count(max(values)) / len(values)


@given(st.lists(st.floats(0.1, 100), min_size=1, max_size=60), st.floats(0.01, 100))
@settings(max_examples=40, deadline=None)
def test_cumulative_scaling(values, c):
    a, b = cumulative(values), cumulative(np.array(values) * c)
    assert np.allclose(b.at(a.x * c), a.c)


def test_weighted_cumulative_matches_expanded():
    a = cumulative([1, 2, 5], weights=[1, 2, 1])
    b = cumulative([1, 2, 2, 5])
    assert np.allclose(a.c, b.c) and a.n == b.n


def test_cumulative_slope_of_gamma_2_2():
    rng = np.random.default_rng(5)
    cd = cumulative(power_law_weights(rng, 200_000, 2.2))
    assert abs(fit_cumulative(cd).slope + 1.2) < 0.1


def test_to_dict_fields():
    d = fit_slope(exact_hist(1.0)).to_dict()
    assert set(d) == {"slope", "intercept", "stderr", "x_range", "n_bins", "method"}
