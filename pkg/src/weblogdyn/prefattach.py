"""Preferential-linking measurement: daily growth against last week's value.

For every day ``d`` with a complete trailing window ``[d - 7, d)`` each element
contributes one sample ``(x, dx)``: ``x`` is its value accumulated over the
window and ``dx`` its growth on day ``d``.  The three targets are

* ``k_ip``  distinct urls per user; growth counts urls not seen in the window;
* ``k_url`` distinct users per url; growth counts users not seen in the window;
* ``w``     clicks per (user, url) pair; growth is the day's clicks.

Samples are log-binned in ``x`` and ``<dx> = A x + B`` is fitted to the bin
means by weighted least squares.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .core import EventStore, TimeGrid
from .errors import InsufficientData
from .powerlaw import DEFAULT_GROWTH, CumulativeDistribution, PowerLawFit, cumulative, fit_cumulative

# |t| of the quadratic term above which the growth curve is called non-linear
CURVATURE_THRESHOLD = 3.0
MIN_BIN_SAMPLES = 10


class PrefTarget(str, enum.Enum):
    K_IP = "k_ip"
    K_URL = "k_url"
    W = "w"


class _PairDays:
    """Sparse (pair x day) click counts plus dense user/url ids per pair."""

    def __init__(self, store: EventStore, grid: TimeGrid):
        grid.check(store)
        self.n_days = grid.n_days(store)
        days = grid.days(store.times)
        pid = store.pair_ids
        pu, pv = store.pair_keys
        self.pair_users, self.pair_urls = pu, pv
        self.user_keys, self.user_of_pair = np.unique(pu, return_inverse=True)
        self.url_keys, self.url_of_pair = np.unique(pv, return_inverse=True)
        self.n_pairs = len(pu)
        m = sparse.coo_matrix(
            (np.ones(len(pid), np.int64), (pid, days)), shape=(self.n_pairs, self.n_days)
        )
        self.matrix = m.tocsc()
        self.matrix.sum_duplicates()

    def column(self, d: int) -> np.ndarray:
        out = np.zeros(self.n_pairs, np.int64)
        lo, hi = self.matrix.indptr[d], self.matrix.indptr[d + 1]
        out[self.matrix.indices[lo:hi]] = self.matrix.data[lo:hi]
        return out

    def window(self, d0: int, d1: int) -> np.ndarray:
        out = np.zeros(self.n_pairs, np.int64)
        for d in range(max(d0, 0), min(d1, self.n_days)):
            lo, hi = self.matrix.indptr[d], self.matrix.indptr[d + 1]
            out[self.matrix.indices[lo:hi]] += self.matrix.data[lo:hi]
        return out

    def n_elements(self, target) -> int:
        if target is PrefTarget.W:
            return self.n_pairs
        return len(self.user_keys if target is PrefTarget.K_IP else self.url_keys)

    def element_values(self, target, win: np.ndarray) -> np.ndarray:
        """Value of every element given per-pair window counts."""
        if target is PrefTarget.W:
            return win
        owner = self.user_of_pair if target is PrefTarget.K_IP else self.url_of_pair
        return np.bincount(owner, weights=win > 0, minlength=self.n_elements(target)).astype(np.int64)

    def element_keys(self, target):
        if target is PrefTarget.W:
            return list(zip(self.pair_users.tolist(), self.pair_urls.tolist()))
        return (self.user_keys if target is PrefTarget.K_IP else self.url_keys).tolist()

    def samples(self, target, win: np.ndarray, today: np.ndarray):
        """``(x, dx)`` for elements active in the window or on the day."""
        if target is PrefTarget.W:
            x, dx = win, today
        else:
            owner = self.user_of_pair if target is PrefTarget.K_IP else self.url_of_pair
            n = self.n_elements(target)
            x = np.bincount(owner, weights=win > 0, minlength=n).astype(np.int64)
            fresh = (today > 0) & (win == 0)
            dx = np.bincount(owner, weights=fresh, minlength=n).astype(np.int64)
        keep = (x > 0) | (dx > 0)
        return x[keep], dx[keep]


def _target(target) -> PrefTarget:
    return target if isinstance(target, PrefTarget) else PrefTarget(target)


def accumulate_counts(store: EventStore, target, day_range, grid: TimeGrid | None = None) -> dict:
    """Value of every element active in the local days ``[d0, d1)``."""
    target = _target(target)
    grid = TimeGrid.for_store(store) if grid is None else grid
    d0, d1 = day_range
    pd = _PairDays(store, grid)
    if not 0 <= d0 < d1 <= pd.n_days:
        raise InsufficientData(f"day range {day_range} is empty or outside [0, {pd.n_days})")
    vals = pd.element_values(target, pd.window(d0, d1))
    keys = pd.element_keys(target)
    return {keys[i]: int(vals[i]) for i in np.flatnonzero(vals)}


@dataclass
class PrefAttachCurve:
    target: PrefTarget
    bin_lo: np.ndarray
    bin_hi: np.ndarray
    x: np.ndarray
    mean_dx: np.ndarray
    var_dx: np.ndarray
    n: np.ndarray
    used: np.ndarray
    A: float
    B: float
    stderr_A: float
    stderr_B: float
    curvature: float
    zero_n: int
    zero_mean_dx: float
    window_days: int = 7
    mode: str = "sliding"
    days_used: list = field(default_factory=list)

    @property
    def nonlinear(self) -> bool:
        return abs(self.curvature) > CURVATURE_THRESHOLD

    def rows(self):
        """``(x_bin_center, mean_dx, n)``; the first row is the x = 0 bin."""
        yield 0.0, self.zero_mean_dx, self.zero_n
        for x, m, n in zip(self.x, self.mean_dx, self.n):
            yield float(x), float(m), int(n)

    def fit_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "stderrA": self.stderr_A,
            "stderrB": self.stderr_B,
            "curvature_t": self.curvature,
            "n_bins_fit": int(self.used.sum()),
        }


def _wls(x, y, w, degree):
    """Weighted polynomial fit; returns coefficients (low order first) and stderrs."""
    X = np.vander(x, degree + 1, increasing=True)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    return coef, np.sqrt(np.diag(cov))


def _bin_samples(x, dx, b):
    """Log bins on integer x >= 1; returns per-bin summary arrays."""
    top = int(x.max()) + 1
    n_edges = int(np.ceil(np.log(top) / np.log(b))) + 2
    edges = np.unique(np.ceil(b ** np.arange(n_edges) - 1e-9))
    edges = edges[edges <= top]
    if edges[-1] < top:
        edges = np.append(edges, top)
    idx = np.searchsorted(edges, x, side="right") - 1
    nb = len(edges) - 1
    n = np.bincount(idx, minlength=nb)
    sx = np.bincount(idx, weights=x, minlength=nb)
    sd = np.bincount(idx, weights=dx, minlength=nb)
    sd2 = np.bincount(idx, weights=dx.astype(float) ** 2, minlength=nb)
    ok = n > 0
    mean_dx = sd[ok] / n[ok]
    var = np.where(n[ok] > 1, (sd2[ok] - n[ok] * mean_dx**2) / np.maximum(n[ok] - 1, 1), 0.0)
    return edges[:-1][ok], edges[1:][ok], sx[ok] / n[ok], mean_dx, np.maximum(var, 0.0), n[ok]


def delta_curve(
    store: EventStore,
    target,
    grid: TimeGrid | None = None,
    b: float = DEFAULT_GROWTH,
    window: int = 7,
    mode: str = "sliding",
    min_samples: int = MIN_BIN_SAMPLES,
    x_range=None,
) -> PrefAttachCurve:
    """Binned ``<dx>`` against ``x`` and its linear fit.

    ``mode="sliding"`` uses every day with a full trailing window;
    ``"disjoint"`` only days ``window, 2*window, ...``.  Samples with ``x = 0``
    (elements new on the day) are summarised separately and left out of the
    fit.  Bins with fewer than ``min_samples`` samples, or whose mean ``x``
    falls outside ``x_range``, are not fitted.  Each fitted bin is weighted by
    ``n / var(dx)``.  ``curvature`` is the t-statistic of a quadratic term
    added to the same weighted fit.
    """
    target = _target(target)
    grid = TimeGrid.for_store(store) if grid is None else grid
    pd = _PairDays(store, grid)
    if pd.n_days < window + 1:
        raise InsufficientData(f"need at least {window + 1} days, have {pd.n_days}")
    if mode == "sliding":
        days = range(window, pd.n_days)
    elif mode == "disjoint":
        days = range(window, pd.n_days, window)
    else:
        raise ValueError(f"unknown window mode {mode!r}")

    xs, dxs = [], []
    win = pd.window(0, window)
    for d in range(window, pd.n_days):
        today = pd.column(d)
        if d in days:
            x, dx = pd.samples(target, win, today)
            xs.append(x)
            dxs.append(dx)
        if mode == "sliding":
            win += today - pd.column(d - window)
        elif d + 1 in days:
            win = pd.window(d + 1 - window, d + 1)
    x = np.concatenate(xs)
    dx = np.concatenate(dxs)
    zero = x == 0
    zero_n = int(zero.sum())
    zero_mean = float(dx[zero].mean()) if zero_n else float("nan")
    x, dx = x[~zero], dx[~zero]
    if len(x) == 0:
        raise InsufficientData("no element was active in any trailing window")
    lo, hi, xm, mean_dx, var, n = _bin_samples(x, dx, b)

    used = n >= min_samples
    if x_range is not None:
        used &= (xm >= x_range[0]) & (xm <= x_range[1])
    if used.sum() < 3:
        raise InsufficientData(f"only {int(used.sum())} bins with >= {min_samples} samples")
    v = var[used]
    floor = v[v > 0].min() if (v > 0).any() else 1.0
    w = n[used] / np.maximum(v, floor)
    (B, A), (se_B, se_A) = _wls(xm[used], mean_dx[used], w, 1)
    if used.sum() >= 4:
        coef, se = _wls(xm[used], mean_dx[used], w, 2)
        curvature = float(coef[2] / se[2])
    else:
        curvature = float("nan")
    return PrefAttachCurve(
        target, lo, hi, xm, mean_dx, var, n, used,
        float(A), float(B), float(se_A), float(se_B), curvature,
        zero_n, zero_mean, window, mode, list(days),
    )


# ---- cumulative distributions over weekly and full windows


@dataclass
class WindowedDistributionPair:
    target: PrefTarget
    x: np.ndarray
    c_weekly: np.ndarray
    full: CumulativeDistribution
    window_values: np.ndarray
    full_values: np.ndarray
    window_days: int = 7

    @property
    def n_windows(self) -> int:
        return self.window_values.shape[1]

    @property
    def weekly(self) -> CumulativeDistribution:
        n = float((self.window_values > 0).sum(axis=0).mean())
        return CumulativeDistribution(self.x, self.c_weekly, n)

    def rows(self):
        """``(x, C_weekly, C_full)`` on the union of observed values."""
        xs = np.union1d(self.x, self.full.x)
        cw = self.weekly.at(xs)
        cf = self.full.at(xs)
        for a, b, c in zip(xs, cw, cf):
            yield float(a), float(b), float(c)


def _weekly_average(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Pointwise mean over windows (columns) of each window's C on ``grid``."""
    acc = np.zeros(len(grid))
    for w in range(values.shape[1]):
        col = values[:, w]
        col = np.sort(col[col > 0])
        acc += (len(col) - np.searchsorted(col, grid, side="left")) / len(col)
    return acc / values.shape[1]


def windowed_distributions(
    store: EventStore,
    target,
    grid: TimeGrid | None = None,
    window: int = 7,
) -> WindowedDistributionPair:
    """C(x) averaged over disjoint weekly windows, and C(x) over the full span.

    Each window's C is a step function, evaluated exactly on the union of
    values seen in any window before averaging.  Windows without activity are
    skipped.
    """
    target = _target(target)
    grid = TimeGrid.for_store(store) if grid is None else grid
    pd = _PairDays(store, grid)
    n_win = pd.n_days // window
    if n_win < 1:
        raise InsufficientData(f"span of {pd.n_days} days holds no full {window}-day window")
    cols = []
    for k in range(n_win):
        vals = pd.element_values(target, pd.window(k * window, (k + 1) * window))
        if vals.any():
            cols.append(vals)
    values = np.column_stack(cols)
    full_vals = pd.element_values(target, pd.window(0, pd.n_days))
    x = np.unique(values[values > 0])
    return WindowedDistributionPair(
        target,
        x.astype(float),
        _weekly_average(values, x),
        _cdist(full_vals),
        values,
        full_vals,
        window,
    )


def _cdist(values):
    return cumulative(values[values > 0])


@dataclass
class WindowSlopeComparison:
    weekly: PowerLawFit
    full: PowerLawFit
    stderr_weekly: float
    stderr_full: float

    @property
    def difference(self) -> float:
        return self.weekly.slope - self.full.slope

    @property
    def combined_stderr(self) -> float:
        return float(np.hypot(self.stderr_weekly, self.stderr_full))

    @property
    def z(self) -> float:
        return self.difference / self.combined_stderr

    def to_dict(self) -> dict:
        return {
            "slope_weekly": self.weekly.slope,
            "slope_full": self.full.slope,
            "stderr_weekly": self.stderr_weekly,
            "stderr_full": self.stderr_full,
            "range_weekly": list(self.weekly.x_range),
            "range_full": list(self.full.x_range),
            "difference": self.difference,
            "z": self.z,
        }


def level_range(cd: CumulativeDistribution, c_high: float = 0.5, min_tail: float = 10.0):
    """x range from where C falls to ``c_high`` down to the last value with
    at least ``min_tail`` elements at or above it."""
    lo = cd.x[np.searchsorted(-cd.c, -c_high, side="left")]
    hi = cd.x[cd.c * cd.n >= min_tail][-1]
    return float(lo), float(hi)


def _grid_points(x_range, b):
    lo, hi = x_range
    return lo * b ** np.arange(int(np.floor(np.log(hi / lo) / np.log(b))) + 1)


def _slope_on(grid, c):
    ok = c > 0
    lx, lc = np.log10(grid[ok]), np.log10(c[ok])
    return np.polyfit(lx, lc, 1)[0]


def compare_window_slopes(
    pair: WindowedDistributionPair,
    range_weekly=None,
    range_full=None,
    b: float = DEFAULT_GROWTH,
    n_boot: int = 200,
    seed: int = 0,
) -> WindowSlopeComparison:
    """Fitted log-log slopes of the weekly and full C(x), with bootstrap errors.

    Elements are resampled with replacement and both curves are rebuilt from
    the same resample, so the errors reflect which elements happened to be
    observed.  Fit ranges default to :func:`level_range` of each curve and stay
    fixed across replicates.
    """
    weekly_cd = pair.weekly
    range_weekly = level_range(weekly_cd) if range_weekly is None else range_weekly
    range_full = level_range(pair.full) if range_full is None else range_full
    fit_w = fit_cumulative(weekly_cd, range_weekly, b)
    fit_f = fit_cumulative(pair.full, range_full, b)
    gw, gf = _grid_points(range_weekly, b), _grid_points(range_full, b)
    rng = np.random.default_rng(seed)
    n = len(pair.full_values)
    sw, sf = [], []
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        sw.append(_slope_on(gw, _weekly_average(pair.window_values[idx], gw)))
        full = np.sort(pair.full_values[idx])
        full = full[full > 0]
        sf.append(_slope_on(gf, (len(full) - np.searchsorted(full, gf, side="left")) / len(full)))
    return WindowSlopeComparison(fit_w, fit_f, float(np.std(sw, ddof=1)), float(np.std(sf, ddof=1)))
