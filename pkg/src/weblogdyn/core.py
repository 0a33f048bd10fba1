"""Click events, the indexed event store and the local-time day grid."""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import EmptyDataset, NotFound

DAY = 86400
DEFAULT_TZ_OFFSET = -14400
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


class ClickEvent(NamedTuple):
    user_id: int
    url_id: int
    timestamp: int


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


class _Grouping:
    """CSR-style grouping of event positions by an integer key."""

    def __init__(self, keys: np.ndarray):
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]]) if len(keys) else np.array([], int)
        self.order = _frozen(order, np.int64)
        self.keys = _frozen(sorted_keys[starts], keys.dtype)
        self.offsets = _frozen(np.r_[starts, len(keys)], np.int64)

    def __len__(self):
        return len(self.keys)

    def positions(self, i: int) -> np.ndarray:
        return self.order[self.offsets[i] : self.offsets[i + 1]]

    def find(self, key) -> int:
        i = int(np.searchsorted(self.keys, key))
        if i == len(self.keys) or self.keys[i] != key:
            return -1
        return i

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)


class EventStore:
    """Immutable, time-sorted click events with per-user and per-pair indices.

    Events are ordered by ``(timestamp, user_id, url_id)``.  ``span`` is the
    declared observation interval; it always contains every timestamp.
    ``user_labels`` and ``url_labels`` optionally map ids back to the (hashed)
    host and normalized path they came from.
    """

    def __init__(self, users, urls, times, span=None, user_labels=(), url_labels=()):
        users = np.asarray(users, dtype=np.int64)
        urls = np.asarray(urls, dtype=np.int64)
        times = np.asarray(times, dtype=np.int64)
        if not (len(users) == len(urls) == len(times)):
            raise ValueError("users, urls and times must have equal length")
        if len(times) == 0:
            raise EmptyDataset("an event store needs at least one event")
        if users.min() < 0 or urls.min() < 0:
            raise ValueError("ids must be non-negative")
        order = np.lexsort((urls, users, times))
        self.users = _frozen(users[order], np.int64)
        self.urls = _frozen(urls[order], np.int64)
        self.times = _frozen(times[order], np.int64)
        lo, hi = int(self.times[0]), int(self.times[-1])
        if span is None:
            span = (lo, hi)
        span = (int(span[0]), int(span[1]))
        if span[0] > lo or span[1] < hi:
            raise ValueError(f"span {span} does not cover events [{lo}, {hi}]")
        self.span = span
        self.user_labels = tuple(user_labels)
        self.url_labels = tuple(url_labels)
        self._by_user = None
        self._by_pair = None
        self._pair_ids = None

    # ---- indices

    @property
    def user_index(self) -> _Grouping:
        if self._by_user is None:
            self._by_user = _Grouping(self.users)
        return self._by_user

    @property
    def pair_ids(self) -> np.ndarray:
        """Dense id of the (user, url) pair of every event."""
        if self._pair_ids is None:
            key = (self.users << 32) | self.urls
            uniq, inv = np.unique(key, return_inverse=True)
            self._pair_keys = (_frozen(uniq >> 32, np.int64), _frozen(uniq & 0xFFFFFFFF, np.int64))
            self._pair_ids = _frozen(inv.ravel(), np.int64)
        return self._pair_ids

    @property
    def pair_keys(self) -> tuple[np.ndarray, np.ndarray]:
        """``(user, url)`` arrays indexed by pair id."""
        self.pair_ids
        return self._pair_keys

    @property
    def pair_index(self) -> _Grouping:
        if self._by_pair is None:
            self._by_pair = _Grouping(self.pair_ids)
        return self._by_pair

    def user_positions(self, user_id: int) -> np.ndarray:
        i = self.user_index.find(user_id)
        if i < 0:
            raise NotFound(f"unknown user {user_id}")
        return self.user_index.positions(i)

    def pair_positions(self, user_id: int, url_id: int) -> np.ndarray:
        users, urls = self.pair_keys
        key = (user_id << 32) | url_id
        i = int(np.searchsorted((users << 32) | urls, key))
        if i == len(users) or users[i] != user_id or urls[i] != url_id:
            raise NotFound(f"unknown pair ({user_id}, {url_id})")
        return self.pair_index.positions(i)

    # ---- sequence protocol

    def __len__(self):
        return len(self.times)

    def __iter__(self) -> Iterator[ClickEvent]:
        for u, v, t in zip(self.users.tolist(), self.urls.tolist(), self.times.tolist()):
            yield ClickEvent(u, v, t)

    @property
    def events(self) -> list[ClickEvent]:
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, EventStore):
            return NotImplemented
        return (
            self.span == other.span
            and self.user_labels == other.user_labels
            and self.url_labels == other.url_labels
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.urls, other.urls)
        )

    def __repr__(self):
        return f"EventStore(n={len(self)}, span={self.span})"

    def restrict(self, mask) -> EventStore:
        """Sub-store of the events selected by a boolean mask (span kept)."""
        return EventStore(self.users[mask], self.urls[mask], self.times[mask], self.span,
                          self.user_labels, self.url_labels)


def build_store(events: Iterable[ClickEvent] | EventStore, span=None) -> EventStore:
    """Sort and index a collection of click events."""
    if isinstance(events, EventStore):
        return EventStore(events.users, events.urls, events.times,
                          span or events.span, events.user_labels, events.url_labels)
    events = list(events)
    if not events:
        raise EmptyDataset("no events")
    arr = np.array(events, dtype=np.int64).reshape(-1, 3)
    return EventStore(arr[:, 0], arr[:, 1], arr[:, 2], span)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-offset local clock used for day and hour bucketing.

    ``day_origin`` is a local-clock epoch value (already shifted by
    ``tz_offset``) falling on a midnight.
    """

    day_origin: int
    tz_offset: int = DEFAULT_TZ_OFFSET

    @classmethod
    def for_store(cls, store: EventStore, tz_offset: int = DEFAULT_TZ_OFFSET) -> TimeGrid:
        local = store.span[0] + tz_offset
        return cls(local - local % DAY, tz_offset)

    def days(self, times) -> np.ndarray:
        return (np.asarray(times, dtype=np.int64) + self.tz_offset - self.day_origin) // DAY

    def hours(self, times) -> np.ndarray:
        return ((np.asarray(times, dtype=np.int64) + self.tz_offset - self.day_origin) % DAY) // 3600

    def day_start(self, day: int) -> int:
        """Epoch seconds (UTC) at which local day ``day`` begins."""
        return self.day_origin + day * DAY - self.tz_offset

    def date(self, day: int) -> _dt.date:
        return _dt.date(1970, 1, 1) + _dt.timedelta(days=(self.day_origin // DAY) + int(day))

    def weekday(self, day) -> np.ndarray | int:
        # 1970-01-01 was a Thursday (index 3)
        return (self.day_origin // DAY + np.asarray(day) + 3) % 7

    def n_days(self, store: EventStore) -> int:
        return int(self.days(store.span[1])) + 1

    def check(self, store: EventStore) -> None:
        if self.days(store.span[0]) < 0:
            raise ValueError("time grid starts after the first event")


def day_of(event: ClickEvent, grid: TimeGrid) -> int:
    return int(grid.days(event.timestamp))
