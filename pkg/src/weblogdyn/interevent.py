"""Times between consecutive clicks, per (user, url) pair and per user."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EventStore, TimeGrid
from .errors import NotFound
from .powerlaw import DEFAULT_GROWTH, LogBinnedHistogram, log_bin

VISIT = "visit"
CLICK = "click"


@dataclass
class InterEventSample:
    kind: str
    values: np.ndarray
    zero_gaps: int
    n_streams: int

    def __len__(self):
        return len(self.values)

    def histogram(self, b: float = DEFAULT_GROWTH) -> LogBinnedHistogram:
        return log_bin(self.values, b=b, x_min=1, discrete=True)


def _stream_gaps(kind, keys, order, times):
    t = times[order]
    k = keys[order]
    same = k[1:] == k[:-1]
    gaps = np.diff(t)[same]
    zero = int((gaps == 0).sum())
    n_streams = int(np.count_nonzero(np.r_[True, ~same]))
    return InterEventSample(kind, gaps[gaps > 0], zero, n_streams)


def tau_v(store: EventStore) -> InterEventSample:
    """Gaps between consecutive visits of one user to one url, pooled."""
    return _stream_gaps(VISIT, store.pair_ids, store.pair_index.order, store.times)


def tau_c(store: EventStore) -> InterEventSample:
    """Gaps between consecutive clicks of one user anywhere, pooled."""
    return _stream_gaps(CLICK, store.users, store.user_index.order, store.times)


def inter_event(store: EventStore, kind: str) -> InterEventSample:
    if kind == VISIT:
        return tau_v(store)
    if kind == CLICK:
        return tau_c(store)
    raise ValueError(f"kind must be {VISIT!r} or {CLICK!r}")


@dataclass
class UserProfile:
    user_id: int
    timestamps: np.ndarray
    cv: float
    max_per_minute: int
    active_days: int

    @property
    def cumulative(self) -> np.ndarray:
        return np.arange(1, len(self.timestamps) + 1)

    @property
    def cv_defined(self) -> bool:
        return not np.isnan(self.cv)


def user_profile(store: EventStore, user_id: int, grid: TimeGrid | None = None) -> UserProfile:
    """Click history and regularity metrics of one user.

    ``cv`` is the coefficient of variation of the gaps (NaN with fewer than
    two events or a zero mean gap); ``max_per_minute`` is the largest number
    of clicks falling in any 60-second window ``[t, t + 60)``.
    """
    try:
        pos = store.user_positions(user_id)
    except NotFound:
        raise NotFound(f"unknown user {user_id}") from None
    t = store.times[pos]
    gaps = np.diff(t)
    cv = float(gaps.std() / gaps.mean()) if len(gaps) and gaps.mean() > 0 else float("nan")
    per_minute = int((np.searchsorted(t, t + 60, side="left") - np.arange(len(t))).max())
    grid = TimeGrid.for_store(store) if grid is None else grid
    active = len(np.unique(grid.days(t)))
    return UserProfile(int(user_id), t, cv, per_minute, active)
