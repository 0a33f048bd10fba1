"""Daily totals, day-of-week averages, hourly profiles and week comparisons."""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .core import DAY, WEEKDAYS, EventStore, TimeGrid
from .errors import InsufficientData

DAY_CLASSES = ("weekday", "saturday", "sunday")


@dataclass
class DailySeries:
    counts: np.ndarray
    dates: list
    weekdays: np.ndarray
    complete: np.ndarray

    @property
    def days(self) -> np.ndarray:
        return np.arange(len(self.counts))

    def __len__(self):
        return len(self.counts)


@dataclass
class DayOfWeekProfile:
    mean: np.ndarray
    sigma: np.ndarray
    n: np.ndarray

    @property
    def band(self) -> np.ndarray:
        return 2 * self.sigma

    def rows(self):
        for d in range(7):
            yield WEEKDAYS[d], float(self.mean[d]), float(self.sigma[d]), float(self.band[d]), int(self.n[d])


@dataclass
class HourlyProfile:
    day_class: str
    mean: np.ndarray
    n_days: int
    total: int


@dataclass
class DayDeviation:
    day: int
    date: _dt.date
    weekday: str
    observed: float
    mean: float
    sigma: float
    z: float

    @property
    def z_defined(self) -> bool:
        return not np.isnan(self.z)


def _grid(store, grid):
    grid = TimeGrid.for_store(store) if grid is None else grid
    grid.check(store)
    return grid


def daily_series(store: EventStore, grid: TimeGrid | None = None) -> DailySeries:
    """Clicks per local day over the whole span, zero days included.

    A day is complete when the observation span covers all of it.
    """
    grid = _grid(store, grid)
    n = grid.n_days(store)
    counts = np.bincount(grid.days(store.times), minlength=n)
    starts = np.array([grid.day_start(d) for d in range(n + 1)])
    complete = (starts[:-1] >= store.span[0]) & (starts[1:] - 1 <= store.span[1])
    weekdays = np.asarray(grid.weekday(np.arange(n)))
    return DailySeries(counts, [grid.date(d) for d in range(n)], weekdays, complete)


def day_of_week_profile(series: DailySeries) -> DayOfWeekProfile:
    """Mean and population standard deviation of complete-day totals per weekday."""
    full = series.complete
    if full.sum() < 14:
        raise InsufficientData(f"need two full weeks of complete days, have {int(full.sum())}")
    counts = series.counts[full].astype(float)
    wd = series.weekdays[full]
    mean, sigma, n = np.zeros(7), np.zeros(7), np.zeros(7, int)
    for d in range(7):
        vals = counts[wd == d]
        if len(vals) == 0:
            raise InsufficientData(f"no complete {WEEKDAYS[d]} in the series")
        mean[d], sigma[d], n[d] = vals.mean(), vals.std(), len(vals)
    return DayOfWeekProfile(mean, sigma, n)


def day_class(weekday) -> np.ndarray:
    """0 for Mon-Fri, 1 for Saturday, 2 for Sunday."""
    weekday = np.asarray(weekday)
    return np.where(weekday < 5, 0, weekday - 4)


def hourly_profile(store: EventStore, grid: TimeGrid | None = None) -> dict[str, HourlyProfile]:
    """Average clicks per local hour for weekdays, Saturdays and Sundays.

    Means are normalised by the number of calendar days of each class in the
    span, so ``mean.sum() * n_days`` gives back the class total.
    """
    grid = _grid(store, grid)
    days = grid.days(store.times)
    cls = day_class(grid.weekday(days))
    hours = grid.hours(store.times)
    table = np.bincount(cls * 24 + hours, minlength=72).reshape(3, 24)
    n_per_class = np.bincount(day_class(grid.weekday(np.arange(grid.n_days(store)))), minlength=3)
    out = {}
    for i, name in enumerate(DAY_CLASSES):
        nd = int(n_per_class[i])
        mean = table[i] / nd if nd else np.full(24, np.nan)
        out[name] = HourlyProfile(name, mean, nd, int(table[i].sum()))
    return out


def compare_week(series: DailySeries, week_start_day: int, profile: DayOfWeekProfile) -> list[DayDeviation]:
    """Deviation of seven consecutive days from the average week.

    ``z`` is NaN where the weekday's standard deviation is zero.
    """
    if week_start_day < 0 or week_start_day + 7 > len(series):
        raise ValueError(f"days {week_start_day}..{week_start_day + 6} fall outside the series")
    out = []
    for d in range(week_start_day, week_start_day + 7):
        wd = int(series.weekdays[d])
        mu, sd = float(profile.mean[wd]), float(profile.sigma[wd])
        obs = float(series.counts[d])
        z = (obs - mu) / sd if sd > 0 else float("nan")
        out.append(DayDeviation(d, series.dates[d], WEEKDAYS[wd], obs, mu, sd, z))
    return out


def day_index_of(series: DailySeries, date: _dt.date) -> int:
    try:
        return series.dates.index(date)
    except ValueError:
        raise ValueError(f"{date} is outside the series") from None


def autocorrelation(counts, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation for lags ``0..max_lag``."""
    x = np.asarray(counts, dtype=float)
    x = x - x.mean()
    denom = (x * x).sum()
    return np.array([(x[: len(x) - k] * x[k:]).sum() / denom for k in range(max_lag + 1)])


__all__ = [
    "DAY",
    "DailySeries",
    "DayOfWeekProfile",
    "HourlyProfile",
    "DayDeviation",
    "daily_series",
    "day_of_week_profile",
    "hourly_profile",
    "compare_week",
    "autocorrelation",
]
