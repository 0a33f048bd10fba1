"""Synthetic click logs with planted dynamics and a ground-truth manifest.

A :class:`GeneratorSpec` combines independent components, each of which can be
left out:

* ``volume``   daily volume shaped by weekly and hourly weights, users and urls
               drawn from (optionally power-law) weights, urls optionally
               living for a fixed number of days with decaying interest;
* ``kernel``   (user, url) pairs whose daily clicks are Poisson with mean
               ``A*x + B`` (or ``A*sqrt(x) + B``), ``x`` = last week's clicks;
* ``gaps``     streams whose successive gaps follow a discrete power law;
* ``cohorts``  groups of urls born and retired on given days.

Every component owns a disjoint block of user and url ids; the offsets are
recorded in the manifest.
"""
from __future__ import annotations

import calendar
import datetime as _dt
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DAY, DEFAULT_TZ_OFFSET, EventStore

PAGE_EXTENSIONS = ("html", "htm", "shtml", "shtm", "cfm", "php", "asp", "aspx", "jsp", "txt")


class InfeasibleSpec(ValueError):
    pass


@dataclass
class VolumeSpec:
    base_per_day: float = 1000.0
    n_users: int = 1000
    user_exponent: float | None = None
    n_urls: int = 1000
    url_exponent: float | None = None
    url_lifetime: int | None = None
    url_decay: float | None = None


@dataclass
class KernelSpec:
    n_pairs: int = 10_000
    A: float = 0.1
    B: float = 0.5
    form: str = "linear"
    window: int = 7
    urls_per_user: int = 5


@dataclass
class GapSpec:
    kind: str = "visit"
    exponent: float = 1.0
    tau_min: int = 1
    tau_max: int = 10_000
    n_streams: int = 1000
    events_per_stream: int = 1001
    url_pool: int = 50


@dataclass
class UrlCohort:
    n_urls: int
    birth_day: int
    death_day: int
    clicks_per_day: float = 0.3
    n_users: int = 500


@dataclass
class GeneratorSpec:
    n_days: int = 28
    start_date: str = "2005-04-01"
    tz_offset: int = DEFAULT_TZ_OFFSET
    seed: int = 0
    weekly_weights: tuple = (1.0,) * 7
    hourly_weights: tuple = (1.0,) * 24
    volume: VolumeSpec | None = None
    kernel: KernelSpec | None = None
    gaps: GapSpec | None = None
    cohorts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weekly_weights"] = list(self.weekly_weights)
        d["hourly_weights"] = list(self.hourly_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorSpec:
        d = dict(d)
        for key, sub in (("volume", VolumeSpec), ("kernel", KernelSpec), ("gaps", GapSpec)):
            if d.get(key) is not None:
                d[key] = sub(**d[key])
        d["cohorts"] = [UrlCohort(**c) for c in d.get("cohorts", [])]
        d["weekly_weights"] = tuple(d.get("weekly_weights", (1.0,) * 7))
        d["hourly_weights"] = tuple(d.get("hourly_weights", (1.0,) * 24))
        return cls(**d)

    @property
    def start_epoch(self) -> int:
        """UTC epoch of local midnight on ``start_date``."""
        y, m, dd = (int(p) for p in self.start_date.split("-"))
        return calendar.timegm((y, m, dd, 0, 0, 0)) - self.tz_offset

    def validate(self) -> None:
        w, h = np.asarray(self.weekly_weights, float), np.asarray(self.hourly_weights, float)
        if len(w) != 7 or len(h) != 24:
            raise InfeasibleSpec("need 7 weekly and 24 hourly weights")
        if (w < 0).any() or (h < 0).any():
            raise InfeasibleSpec("weights must be non-negative")
        if h.sum() == 0:
            raise InfeasibleSpec("all hourly weights are zero")
        if self.volume is not None and w.sum() == 0:
            raise InfeasibleSpec("all weekly weights are zero")
        if self.n_days < 1:
            raise InfeasibleSpec("n_days must be positive")
        if self.kernel is not None and self.kernel.A < 0:
            raise InfeasibleSpec("kernel A must be non-negative")
        if not any([self.volume, self.kernel, self.gaps, self.cohorts]):
            raise InfeasibleSpec("spec enables no component")
        for c in self.cohorts:
            if not 0 <= c.birth_day <= c.death_day < self.n_days:
                raise InfeasibleSpec(f"cohort days {c.birth_day}..{c.death_day} outside span")


@dataclass
class GroundTruth:
    manifest: dict

    def to_json(self) -> str:
        return json.dumps(self.manifest, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> GroundTruth:
        return cls(json.loads(text))

    @property
    def spec(self) -> GeneratorSpec:
        return GeneratorSpec.from_dict(self.manifest["spec"])


def power_law_weights(rng, n, exponent, x_min=1.0):
    """``n`` continuous draws with density proportional to ``x**-exponent``."""
    return x_min * (1 - rng.random(n)) ** (-1.0 / (exponent - 1.0))


def discrete_power_law(rng, n, exponent, lo, hi):
    """Inverse-CDF draws of integers in ``[lo, hi]`` with P(k) ~ k**-exponent."""
    k = np.arange(lo, hi + 1)
    cdf = np.cumsum(k ** -float(exponent))
    cdf /= cdf[-1]
    return k[np.searchsorted(cdf, rng.random(n), side="right").clip(max=len(k) - 1)]


def _times_in_day(rng, day_starts, hourly):
    """One timestamp per entry of ``day_starts`` following the hourly weights."""
    p = np.asarray(hourly, float)
    hours = rng.choice(24, size=len(day_starts), p=p / p.sum())
    return day_starts + hours * 3600 + rng.integers(0, 3600, len(day_starts))


class _Builder:
    def __init__(self, spec: GeneratorSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.t0 = spec.start_epoch
        self.users, self.urls, self.times = [], [], []
        self.user_base = 0
        self.url_base = 0
        self.truth = {"components": {}}

    def day_start(self, d):
        return self.t0 + np.asarray(d, np.int64) * DAY

    def weekday(self, d):
        return (np.asarray(d) + (self.t0 + self.spec.tz_offset) // DAY + 3) % 7

    def add(self, name, users, urls, times, n_users, n_urls, **extra):
        users = np.asarray(users, np.int64) + self.user_base
        urls = np.asarray(urls, np.int64) + self.url_base
        self.users.append(users)
        self.urls.append(urls)
        self.times.append(np.asarray(times, np.int64))
        self.truth["components"][name] = {
            "events": int(len(users)),
            "user_offset": self.user_base,
            "url_offset": self.url_base,
            **extra,
        }
        self.user_base += n_users
        self.url_base += n_urls


def _volume(b: _Builder):
    spec, v, rng = b.spec, b.spec.volume, b.rng
    weekly = np.asarray(spec.weekly_weights, float)
    days = np.arange(spec.n_days)
    per_day = rng.poisson(v.base_per_day * weekly[b.weekday(days)])
    day_of = np.repeat(days, per_day)
    times = _times_in_day(rng, b.day_start(day_of), spec.hourly_weights)

    if v.user_exponent is None:
        users = rng.integers(0, v.n_users, len(times))
        user_w = None
    else:
        user_w = power_law_weights(rng, v.n_users, v.user_exponent)
        users = np.searchsorted(np.cumsum(user_w) / user_w.sum(), rng.random(len(times)), side="right")
        users = users.clip(max=v.n_users - 1)

    pop = np.ones(v.n_urls) if v.url_exponent is None else power_law_weights(rng, v.n_urls, v.url_exponent)
    urls = np.empty(len(times), np.int64)
    extra = {}
    if v.url_lifetime is None:
        if v.url_exponent is None:
            urls[:] = rng.integers(0, v.n_urls, len(times))
        else:
            cdf = np.cumsum(pop) / pop.sum()
            urls[:] = np.searchsorted(cdf, rng.random(len(times)), side="right").clip(max=v.n_urls - 1)
    else:
        birth = rng.integers(-v.url_lifetime + 1, spec.n_days, v.n_urls)
        extra["url_birth_day"] = birth.tolist() if v.n_urls <= 10_000 else None
        start = np.r_[0, np.cumsum(per_day)]
        for d in days:
            age = d - birth
            w = np.where((age >= 0) & (age < v.url_lifetime), pop, 0.0)
            if v.url_decay:
                w = w * np.exp(-np.clip(age, 0, None) / v.url_decay)
            k = start[d + 1] - start[d]
            if k == 0:
                continue
            if w.sum() == 0:
                raise InfeasibleSpec(f"no url alive on day {d}")
            cdf = np.cumsum(w) / w.sum()
            urls[start[d] : start[d + 1]] = np.searchsorted(cdf, rng.random(k), side="right").clip(max=v.n_urls - 1)
    b.add("volume", users, urls, times, v.n_users, v.n_urls, daily_counts=per_day.tolist(), **extra)


def _kernel(b: _Builder):
    spec, k, rng = b.spec, b.spec.kernel, b.rng
    if k.form not in ("linear", "sqrt"):
        raise InfeasibleSpec(f"unknown kernel form {k.form!r}")
    n, W = k.n_pairs, k.window
    # start near the stationary daily mean
    if k.form == "linear":
        mu0 = k.B / (1 - W * k.A) if W * k.A < 1 else k.B + 1
    else:
        mu0 = k.B
        for _ in range(100):
            mu0 = k.A * np.sqrt(W * mu0) + k.B
    clicks = np.zeros((spec.n_days, n), np.int64)
    for d in range(spec.n_days):
        if d < W:
            clicks[d] = rng.poisson(mu0, n)
            continue
        x = clicks[d - W : d].sum(axis=0)
        mean = k.A * (x if k.form == "linear" else np.sqrt(x)) + k.B
        clicks[d] = rng.poisson(mean)
    day_idx, pair = np.nonzero(clicks)
    reps = clicks[day_idx, pair]
    day_of = np.repeat(day_idx, reps)
    pair = np.repeat(pair, reps)
    times = _times_in_day(rng, b.day_start(day_of), spec.hourly_weights)
    n_users = -(-n // k.urls_per_user)
    b.add("kernel", pair // k.urls_per_user, pair, times, n_users, n, A=k.A, B=k.B, form=k.form)


def _gaps(b: _Builder):
    spec, g, rng = b.spec, b.spec.gaps, b.rng
    if g.kind not in ("visit", "click"):
        raise InfeasibleSpec(f"unknown gap kind {g.kind!r}")
    m = g.events_per_stream
    gaps = discrete_power_law(rng, g.n_streams * (m - 1), g.exponent, g.tau_min, g.tau_max)
    gaps = gaps.reshape(g.n_streams, m - 1)
    start = b.t0 + rng.integers(0, DAY, g.n_streams)
    times = np.concatenate([start[:, None], start[:, None] + np.cumsum(gaps, axis=1)], axis=1)
    stream = np.repeat(np.arange(g.n_streams), m)
    if g.kind == "visit":
        users, urls, n_urls = stream, stream, g.n_streams
    else:
        users = stream
        urls = rng.integers(0, g.url_pool, len(stream))
        n_urls = g.url_pool
    b.add("gaps", users, urls, times.ravel(), g.n_streams, n_urls,
          kind=g.kind, exponent=g.exponent, n_gaps=int(gaps.size))


def _cohorts(b: _Builder):
    spec, rng = b.spec, b.rng
    for i, c in enumerate(spec.cohorts):
        inner = max(c.death_day - c.birth_day - 1, 0)
        per = rng.poisson(c.clicks_per_day, (c.n_urls, inner))
        url_in, day_in = np.nonzero(per)
        reps = per[url_in, day_in]
        url_all = np.r_[np.arange(c.n_urls), np.arange(c.n_urls), np.repeat(url_in, reps)]
        day_all = np.r_[
            np.full(c.n_urls, c.birth_day),
            np.full(c.n_urls, c.death_day),
            c.birth_day + 1 + np.repeat(day_in, reps),
        ]
        times = _times_in_day(rng, b.day_start(day_all), spec.hourly_weights)
        users = rng.integers(0, c.n_users, len(times))
        b.add(f"cohort{i}", users, url_all, times, c.n_users, c.n_urls,
              birth_day=c.birth_day, death_day=c.death_day)


def generate(spec: GeneratorSpec):
    """Draw a synthetic store; returns ``(store, GroundTruth)``."""
    spec.validate()
    b = _Builder(spec)
    if spec.volume is not None:
        _volume(b)
    if spec.kernel is not None:
        _kernel(b)
    if spec.gaps is not None:
        _gaps(b)
    if spec.cohorts:
        _cohorts(b)
    users = np.concatenate(b.users)
    urls = np.concatenate(b.urls)
    times = np.concatenate(b.times)
    t_end = max(b.t0 + spec.n_days * DAY - 1, int(times.max()))
    store = EventStore(users, urls, times, (b.t0, t_end))
    manifest = {
        "spec": spec.to_dict(),
        "n_events": len(store),
        "span": list(store.span),
        **b.truth,
    }
    return store, GroundTruth(manifest)


# ---- NCSA text emission


def host_of(user_id: int) -> str:
    if not 0 <= user_id < 1 << 24:
        raise ValueError(f"user id {user_id} does not fit a 10.x.y.z address")
    return f"10.{user_id >> 16 & 255}.{user_id >> 8 & 255}.{user_id & 255}"


def path_of(url_id: int) -> str:
    """A page path that normalizes back to a unique, accepted url."""
    if url_id % 11 == 0:
        return f"/dir{url_id}/"
    ext = PAGE_EXTENSIONS[url_id % len(PAGE_EXTENSIONS)]
    if url_id % 7 == 0:
        ext = ext.upper()
    query = f"?q={url_id % 5}" if url_id % 3 == 0 else ""
    return f"/s{url_id // 1000}/page{url_id}.{ext}{query}"


def _stamp(t: int, tz_offset: int) -> str:
    local = _dt.datetime(1970, 1, 1) + _dt.timedelta(seconds=int(t) + tz_offset)
    sign = "-" if tz_offset < 0 else "+"
    off = abs(tz_offset)
    return f"{local.day:02d}/{calendar.month_abbr[local.month]}/{local.year}:{local:%H:%M:%S} {sign}{off // 3600:02d}{off % 3600 // 60:02d}"


def emit_ncsa(store: EventStore, fh, tz_offset: int = DEFAULT_TZ_OFFSET, noise: float = 0.0, seed: int = 0) -> dict:
    """Write the store as Combined Log Format lines to a text handle.

    With ``noise > 0`` each event is followed, with that probability, by one
    extra line that ingestion must discard: an image request, a 404 page
    request, or a malformed line (in rotation).  Returns line counts.
    """
    rng = np.random.default_rng(seed)
    extra = rng.random(len(store)) < noise
    counts = {"accepted": 0, "image": 0, "error_status": 0, "malformed": 0}
    kinds = ("image", "error_status", "malformed")
    k = 0
    for (u, v, t), more in zip(zip(store.users.tolist(), store.urls.tolist(), store.times.tolist()), extra):
        host, stamp = host_of(u), _stamp(t, tz_offset)
        fh.write(f'{host} - - [{stamp}] "GET {path_of(v)} HTTP/1.1" 200 {512 + v % 997} "-" "synth/1.0"\n')
        counts["accepted"] += 1
        if more:
            kind = kinds[k % 3]
            k += 1
            counts[kind] += 1
            if kind == "image":
                fh.write(f'{host} - - [{stamp}] "GET /img/logo{v}.png HTTP/1.1" 200 2048\n')
            elif kind == "error_status":
                fh.write(f'{host} - - [{stamp}] "GET /missing{v}.html HTTP/1.1" 404 0\n')
            else:
                fh.write(f'{host} - - [{stamp} "GET /broken.html HTTP/1.1" 200 1\n')
    return counts
