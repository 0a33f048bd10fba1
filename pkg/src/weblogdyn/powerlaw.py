"""Logarithmic binning, least-squares power-law slopes and empirical CCDFs."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, special

from .errors import InsufficientData

DEFAULT_GROWTH = 1.3
# discrete bins wider than this are summed via the half-integer integral
_EXACT_SUM_WIDTH = 64


@dataclass
class LogBinnedHistogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    total: float
    rejected: float = 0
    growth: float = DEFAULT_GROWTH
    discrete: bool = False
    x_max: float | None = None

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        lo, hi = self.edges[:-1], self.edges[1:]
        if self.discrete:
            # geometric mean of the first and last integer in the bin
            return np.sqrt(lo * (hi - 1))
        return np.sqrt(lo * hi)

    def default_range(self) -> tuple[float, float]:
        x_max = self.x_max if self.x_max is not None else self.edges[-1]
        return self.edges[0] * self.growth**2, x_max / self.growth**2

    def rows(self):
        """``(bin_lo, bin_hi, count, density)`` per bin."""
        for lo, hi, c, d in zip(self.edges[:-1], self.edges[1:], self.counts, self.density):
            yield float(lo), float(hi), float(c), float(d)


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    stderr: float
    x_range: tuple[float, float]
    n_bins: int
    method: str = "lsq"

    @property
    def exponent(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x_range"] = [float(v) for v in self.x_range]
        return d


@dataclass
class CumulativeDistribution:
    """Fraction ``c`` of samples that are >= each distinct value ``x``."""

    x: np.ndarray
    c: np.ndarray
    n: float

    def at(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        idx = np.searchsorted(self.x, points, side="left")
        out = np.zeros(points.shape)
        inside = idx < len(self.x)
        out[inside] = self.c[idx[inside]]
        return out


def _edges(x_min: float, x_max: float, b: float, discrete: bool) -> np.ndarray:
    if discrete:
        top = np.floor(x_max) + 1
        n = int(np.ceil(np.log(top / x_min) / np.log(b))) + 2
        edges = np.unique(np.ceil(x_min * b ** np.arange(n) - 1e-9))
        edges = edges[edges <= top]
        if edges[-1] < top:
            edges = np.append(edges, top)
        return edges
    n = int(np.floor(np.log(x_max / x_min) / np.log(b))) + 1
    edges = x_min * b ** np.arange(n + 1)
    while edges[-1] <= x_max:
        edges = np.append(edges, edges[-1] * b)
    return edges


def log_bin(values, b: float = DEFAULT_GROWTH, x_min=None, weights=None, discrete=False):
    """Histogram positive values on edges ``x_min * b**i``.

    Values that are non-positive or below ``x_min`` are not binned; their
    (weighted) number is reported in ``rejected``.  With ``discrete=True`` the
    edges are rounded up to integers and each bin's width is the number of
    integers it holds.
    """
    if b <= 1:
        raise ValueError("growth factor b must exceed 1")
    values = np.asarray(values, dtype=float).ravel()
    weights = np.ones(len(values)) if weights is None else np.asarray(weights, dtype=float).ravel()
    keep = values > 0
    if x_min is not None:
        if x_min <= 0:
            raise ValueError("x_min must be positive")
        keep &= values >= x_min
    rejected = weights[~keep].sum()
    values, weights = values[keep], weights[keep]
    if len(values) == 0:
        raise InsufficientData("no positive values to bin")
    if x_min is None:
        x_min = values.min()
    if discrete:
        x_min = float(np.ceil(x_min))
    x_max = values.max()
    edges = _edges(x_min, x_max, b, discrete)
    idx = np.searchsorted(edges, values, side="right") - 1
    counts = np.bincount(idx, weights=weights, minlength=len(edges) - 1)
    total = counts.sum()
    density = counts / (np.diff(edges) * total)
    return LogBinnedHistogram(
        edges=edges,
        counts=counts,
        density=density,
        total=total,
        rejected=rejected,
        growth=b,
        discrete=discrete,
        x_max=float(x_max),
    )


def _linear_fit(x, y):
    """Ordinary least squares ``y = slope*x + intercept`` with slope stderr."""
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    slope = ((x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    stderr = np.sqrt((resid**2).sum() / (n - 2) / sxx) if n > 2 else np.nan
    return float(slope), float(intercept), float(stderr)


def _select(hist: LogBinnedHistogram, x_range):
    lo, hi = hist.default_range() if x_range is None else x_range
    if not lo < hi:
        raise ValueError(f"empty fit range [{lo}, {hi}]")
    c = hist.centers
    return (c >= lo) & (c <= hi), (float(lo), float(hi))


def fit_slope(hist: LogBinnedHistogram, x_range=None) -> PowerLawFit:
    """Least-squares slope of log density against log bin center.

    Only bins whose center lies inside ``x_range`` and that hold at least one
    sample take part.
    """
    sel, rng = _select(hist, x_range)
    sel &= hist.counts > 0
    if sel.sum() < 4:
        raise InsufficientData(f"need >= 4 non-empty bins in {rng}, got {int(sel.sum())}")
    slope, intercept, stderr = _linear_fit(
        np.log10(hist.centers[sel]), np.log10(hist.density[sel])
    )
    return PowerLawFit(slope, intercept, stderr, rng, int(sel.sum()), "lsq")


def _bin_mass(lo, hi, alpha, discrete):
    """Unnormalised mass of ``x**-alpha`` on each bin ``[lo, hi)``."""
    if discrete:
        out = np.empty(len(lo))
        for i, (a, b) in enumerate(zip(lo, hi)):
            if b - a <= _EXACT_SUM_WIDTH:
                out[i] = (np.arange(a, b) ** -alpha).sum()
            else:
                out[i] = _bin_mass(np.array([a - 0.5]), np.array([b - 0.5]), alpha, False)[0]
        return out
    t = 1.0 - alpha
    r = np.log(hi / lo)
    return lo**t * r * special.exprel(t * r)


def fit_mle(hist: LogBinnedHistogram, x_range=None) -> PowerLawFit:
    """Binned maximum-likelihood exponent, a cross-check on :func:`fit_slope`.

    The bin counts inside the range are treated as a multinomial draw from a
    power law truncated to the selected bins.  ``stderr`` comes from the
    observed information.
    """
    sel, rng = _select(hist, x_range)
    if (hist.counts[sel] > 0).sum() < 4:
        raise InsufficientData(f"need >= 4 non-empty bins in {rng}")
    lo, hi = hist.edges[:-1][sel], hist.edges[1:][sel]
    counts = hist.counts[sel]
    n = counts.sum()

    def nll(alpha):
        mass = _bin_mass(lo, hi, alpha, hist.discrete)
        return -(counts * np.log(mass)).sum() + n * np.log(mass.sum())

    res = optimize.minimize_scalar(nll, bounds=(-3.0, 8.0), method="bounded",
                                   options={"xatol": 1e-10})
    alpha = float(res.x)
    h = 1e-4
    info = (nll(alpha + h) - 2 * nll(alpha) + nll(alpha - h)) / h**2
    stderr = float(1 / np.sqrt(info)) if info > 0 else np.nan
    return PowerLawFit(-alpha, np.nan, stderr, rng, int(sel.sum()), "binned-mle")


def cumulative(values, weights=None) -> CumulativeDistribution:
    values = np.asarray(values, dtype=float).ravel()
    if len(values) == 0:
        raise InsufficientData("cumulative distribution of an empty sample")
    if weights is None:
        x, counts = np.unique(values, return_counts=True)
    else:
        weights = np.asarray(weights, dtype=float).ravel()
        x, inv = np.unique(values, return_inverse=True)
        counts = np.bincount(inv, weights=weights)
    n = counts.sum()
    # fraction at or above each value
    c = np.cumsum(counts[::-1])[::-1] / n
    return CumulativeDistribution(x, c, float(n))


def fit_cumulative(cd: CumulativeDistribution, x_range=None, b: float = DEFAULT_GROWTH):
    """Slope of log C(x) against log x sampled on a geometric grid.

    Sampling on ``x_lo * b**i`` rather than at every distinct value keeps dense
    low-x regions from dominating the fit.  The default range runs from the
    smallest value to the last value with at least ten samples at or above it.
    """
    if x_range is None:
        floor = min(1.0, 10.0 / cd.n)
        x_range = (cd.x[0], cd.x[cd.c >= floor][-1])
    lo, hi = float(x_range[0]), float(x_range[1])
    if not 0 < lo < hi:
        raise ValueError(f"bad fit range [{lo}, {hi}]")
    grid = lo * b ** np.arange(int(np.floor(np.log(hi / lo) / np.log(b))) + 1)
    c = cd.at(grid)
    ok = c > 0
    if ok.sum() < 4:
        raise InsufficientData(f"need >= 4 grid points with C > 0 in [{lo}, {hi}]")
    slope, intercept, stderr = _linear_fit(np.log10(grid[ok]), np.log10(c[ok]))
    return PowerLawFit(slope, intercept, stderr, (lo, hi), int(ok.sum()), "ccdf-lsq")
