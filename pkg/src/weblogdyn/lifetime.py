"""First-seen and last-seen days of every url."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EventStore, TimeGrid


@dataclass
class LifetimeSeries:
    first_seen: np.ndarray
    last_seen: np.ndarray
    url_ids: np.ndarray
    first_day: np.ndarray
    last_day: np.ndarray
    clicks: np.ndarray
    n_days: int

    @property
    def left_censored(self) -> np.ndarray:
        """Urls already alive when observation starts."""
        return self.first_day == 0

    @property
    def right_censored(self) -> np.ndarray:
        """Urls still alive when observation ends."""
        return self.last_day == self.n_days - 1

    def lengths(self, uncensored_only: bool = False) -> np.ndarray:
        span = self.last_day - self.first_day
        if uncensored_only:
            span = span[~(self.left_censored | self.right_censored)]
        return span

    def rows(self):
        for d in range(self.n_days):
            yield d, int(self.first_seen[d]), int(self.last_seen[d])

    def url_rows(self):
        lc, rc = self.left_censored, self.right_censored
        for i in range(len(self.url_ids)):
            flags = ("L" if lc[i] else "") + ("R" if rc[i] else "")
            yield int(self.url_ids[i]), int(self.first_day[i]), int(self.last_day[i]), int(self.clicks[i]), flags or "-"


def lifetime_series(store: EventStore, grid: TimeGrid | None = None) -> LifetimeSeries:
    grid = TimeGrid.for_store(store) if grid is None else grid
    grid.check(store)
    n_days = grid.n_days(store)
    days = grid.days(store.times)
    url_ids, inv, clicks = np.unique(store.urls, return_inverse=True, return_counts=True)
    first = np.full(len(url_ids), n_days, np.int64)
    last = np.full(len(url_ids), -1, np.int64)
    np.minimum.at(first, inv, days)
    np.maximum.at(last, inv, days)
    return LifetimeSeries(
        np.bincount(first, minlength=n_days),
        np.bincount(last, minlength=n_days),
        url_ids,
        first,
        last,
        clicks,
        n_days,
    )
