"""Access-log ingestion: NCSA parsing, page filtering, anonymization, store files.

Store file layout (little-endian)::

    magic "WLDY" | version u32 | n_events u64 | t_start i64 | t_end i64
    n_events x (user u32, url u32, timestamp u64)
    user table, url table: count u64, then per entry (length u32, utf-8 bytes)
"""
from __future__ import annotations

import calendar
import gzip
import hashlib
import io
import json
import os
import struct
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .core import EventStore
from .errors import EmptyDataset, StoreFormatError

DEFAULT_EXTENSIONS = frozenset(
    {"html", "htm", "shtml", "shtm", "cfm", "php", "asp", "aspx", "jsp", "txt"}
)
MAGIC = b"WLDY"
VERSION = 1
_HEADER = struct.Struct("<4sIQqq")
_RECORD = np.dtype([("user", "<u4"), ("url", "<u4"), ("t", "<u8")])
_MONTHS = {m: i for i, m in enumerate(calendar.month_abbr) if m}


class RawLogLine(NamedTuple):
    remote_host: str
    timestamp: int
    timestamp_text: str
    method: str
    path: str
    protocol: str
    status: int
    size: int | None


class Skip(NamedTuple):
    reason: str


@lru_cache(maxsize=4096)
def _day_epoch(date_text: str) -> int:
    day, mon, year = date_text.split("/")
    return calendar.timegm((int(year), _MONTHS[mon], int(day), 0, 0, 0))


def parse_timestamp(text: str) -> int:
    """``dd/Mon/yyyy:HH:MM:SS +zzzz`` to epoch seconds (raises ValueError)."""
    if len(text) != 26 or text[11] != ":" or text[20] != " ":
        raise ValueError(text)
    h, m, s = int(text[12:14]), int(text[15:17]), int(text[18:20])
    sign = text[21]
    if sign not in "+-" or h > 23 or m > 59 or s > 60:
        raise ValueError(text)
    off = int(text[22:24]) * 3600 + int(text[24:26]) * 60
    if sign == "-":
        off = -off
    try:
        base = _day_epoch(text[:11])
    except (KeyError, ValueError) as exc:
        raise ValueError(text) from exc
    return base + h * 3600 + m * 60 + s - off


def parse_line(line: str) -> RawLogLine | Skip:
    """Parse one Common or Combined Log Format record."""
    open_b = line.find(" [")
    if open_b < 0:
        return Skip("bad-format")
    close_b = line.find("]", open_b)
    if close_b < 0:
        return Skip("bad-timestamp")
    head = line[:open_b].split()
    if len(head) != 3:
        return Skip("bad-format")
    ts_text = line[open_b + 2 : close_b]
    try:
        ts = parse_timestamp(ts_text)
    except ValueError:
        return Skip("bad-timestamp")
    rest = line[close_b + 1 :]
    if not rest.startswith(' "'):
        return Skip("bad-format")
    q = rest.find('"', 2)
    while q > 0 and rest[q - 1] == "\\":
        q = rest.find('"', q + 1)
    if q < 0:
        return Skip("bad-format")
    request = rest[2:q].split()
    if len(request) != 3:
        return Skip("bad-request")
    tail = rest[q + 1 :].split()
    if len(tail) < 2:
        return Skip("bad-format")
    if not tail[0].isdigit():
        return Skip("bad-status")
    size = int(tail[1]) if tail[1].isdigit() else None
    return RawLogLine(head[0], ts, ts_text, request[0], request[1], request[2], int(tail[0]), size)


@dataclass(frozen=True)
class UrlFilter:
    accepted_extensions: frozenset = DEFAULT_EXTENSIONS
    strip_query: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "accepted_extensions", frozenset(e.lower().lstrip(".") for e in self.accepted_extensions)
        )


def normalize_and_filter(path: str, url_filter: UrlFilter = UrlFilter()) -> str | None:
    """Canonical page path, or ``None`` when the request is not a page.

    The query string (and fragment) is dropped when the filter says so, a
    trailing slash becomes ``index.html`` and the extension is lower-cased.
    No percent-decoding is applied.
    """
    if not path:
        return None
    if url_filter.strip_query:
        for sep in "?#":
            cut = path.find(sep)
            if cut >= 0:
                path = path[:cut]
        query = ""
    else:
        cut = path.find("?")
        path, query = (path[:cut], path[cut:]) if cut >= 0 else (path, "")
    if path.endswith("/"):
        path += "index.html"
    slash = path.rfind("/")
    dot = path.rfind(".")
    if dot <= slash:
        return None
    ext = path[dot + 1 :].lower()
    if ext not in url_filter.accepted_extensions:
        return None
    return path[: dot + 1] + ext + query


@dataclass
class AnonymizerState:
    """Dense, first-seen id assignment for hosts and pages.

    Hosts are keyed by a keyed BLAKE2 digest so raw addresses never need to be
    kept.  The state can be saved and reloaded to keep ids stable across runs.
    """

    ip_map: dict = field(default_factory=dict)
    url_map: dict = field(default_factory=dict)
    salt: str = ""

    def host_key(self, host: str) -> str:
        return hashlib.blake2b(host.encode(), key=self.salt.encode()[:64], digest_size=16).hexdigest()

    def user_id(self, host: str) -> int:
        key = self.host_key(host)
        uid = self.ip_map.get(key)
        if uid is None:
            uid = self.ip_map[key] = len(self.ip_map)
        return uid

    def url_id(self, path: str) -> int:
        vid = self.url_map.get(path)
        if vid is None:
            vid = self.url_map[path] = len(self.url_map)
        return vid

    def save(self, path) -> None:
        _atomic_write_bytes(path, json.dumps(asdict(self), indent=1).encode())

    @classmethod
    def load(cls, path) -> AnonymizerState:
        with open(path) as fh:
            d = json.load(fh)
        return cls(dict(d["ip_map"]), dict(d["url_map"]), d.get("salt", ""))


@dataclass
class IngestReport:
    files: list = field(default_factory=list)
    lines_read: int = 0
    events: int = 0
    rejected_by_filter: int = 0
    skipped_malformed: int = 0
    error_status_dropped: int = 0
    skip_reasons: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _open_text(path):
    if path == "-":
        return io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8", errors="replace")
    fh = open(path, "rb")
    magic = fh.read(2)
    fh.seek(0)
    if magic == b"\x1f\x8b":
        fh = gzip.GzipFile(fileobj=fh)
    return io.TextIOWrapper(fh, encoding="utf-8", errors="replace")


def _looks_like_tsv(line: str) -> bool:
    parts = line.rstrip("\n").split("\t")
    return len(parts) == 3 and all(p.strip().isdigit() for p in parts)


def ingest_files(
    paths,
    url_filter: UrlFilter = UrlFilter(),
    state: AnonymizerState | None = None,
    keep_all_statuses: bool = False,
    fmt: str = "auto",
):
    """Read log files in order and build an event store.

    ``fmt`` is ``"ncsa"``, ``"tsv"`` (pre-anonymized ``user\\turl\\ttime``) or
    ``"auto"``, decided per file from its first non-empty line.  Returns
    ``(store, report)``; ``state`` is updated in place.
    """
    state = AnonymizerState() if state is None else state
    report = IngestReport()
    users, urls, times = [], [], []
    tsv_seen = ncsa_seen = False
    for path in paths:
        path = os.fspath(path)
        report.files.append(path)
        try:
            fh = _open_text(path)
        except OSError as exc:
            raise OSError(f"cannot read {path!r}: {exc.strerror or exc}") from exc
        with fh:
            file_fmt = fmt
            for line in fh:
                report.lines_read += 1
                if not line.strip():
                    report.skipped_malformed += 1
                    report.skip_reasons["empty"] = report.skip_reasons.get("empty", 0) + 1
                    continue
                if file_fmt == "auto":
                    file_fmt = "tsv" if _looks_like_tsv(line) else "ncsa"
                if file_fmt == "tsv":
                    tsv_seen = True
                    parts = line.rstrip("\n").split("\t")
                    try:
                        u, v, t = (int(p) for p in parts)
                        if len(parts) != 3 or min(u, v, t) < 0:
                            raise ValueError
                    except ValueError:
                        report.skipped_malformed += 1
                        report.skip_reasons["bad-tsv"] = report.skip_reasons.get("bad-tsv", 0) + 1
                        continue
                    users.append(u)
                    urls.append(v)
                    times.append(t)
                    continue
                ncsa_seen = True
                rec = parse_line(line.rstrip("\r\n"))
                if isinstance(rec, Skip):
                    report.skipped_malformed += 1
                    report.skip_reasons[rec.reason] = report.skip_reasons.get(rec.reason, 0) + 1
                    continue
                page = normalize_and_filter(rec.path, url_filter)
                if page is None:
                    report.rejected_by_filter += 1
                    continue
                if rec.status >= 400 and not keep_all_statuses:
                    report.error_status_dropped += 1
                    continue
                users.append(state.user_id(rec.remote_host))
                urls.append(state.url_id(page))
                times.append(rec.timestamp)
    if tsv_seen and ncsa_seen:
        raise ValueError("cannot mix pre-anonymized TSV and NCSA inputs in one store")
    if not times:
        raise EmptyDataset("no events accepted from " + ", ".join(report.files))
    report.events = len(times)
    labels = ((), ()) if tsv_seen else (tuple(state.ip_map), tuple(state.url_map))
    store = EventStore(users, urls, times, None, *labels)
    return store, report


# ---- binary store files


def _atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    if not path:
        raise FileNotFoundError("empty output path")
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack_table(items) -> bytes:
    out = [struct.pack("<Q", len(items))]
    for s in items:
        b = s.encode("utf-8")
        out.append(struct.pack("<I", len(b)))
        out.append(b)
    return b"".join(out)


def store_bytes(store: EventStore) -> bytes:
    if store.times[0] < 0:
        raise ValueError("timestamps before 1970 cannot be stored")
    if max(store.users.max(), store.urls.max()) >= 2**32:
        raise ValueError("ids must fit in 32 bits")
    rec = np.empty(len(store), dtype=_RECORD)
    rec["user"], rec["url"], rec["t"] = store.users, store.urls, store.times
    return b"".join(
        [
            _HEADER.pack(MAGIC, VERSION, len(store), *store.span),
            rec.tobytes(),
            _pack_table(store.user_labels),
            _pack_table(store.url_labels),
        ]
    )


def save_store(store: EventStore, path) -> None:
    _atomic_write_bytes(path, store_bytes(store))


def _read_table(buf, pos, path):
    if pos + 8 > len(buf):
        raise StoreFormatError(f"{path}: truncated string table")
    (count,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    items = []
    for _ in range(count):
        if pos + 4 > len(buf):
            raise StoreFormatError(f"{path}: truncated string table")
        (n,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        if pos + n > len(buf):
            raise StoreFormatError(f"{path}: truncated string table")
        items.append(bytes(buf[pos : pos + n]).decode("utf-8"))
        pos += n
    return tuple(items), pos


def load_store(path) -> EventStore:
    path = os.fspath(path)
    if not path:
        raise FileNotFoundError("empty store path")
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise StoreFormatError(f"{path}: truncated header")
    magic, version, n, t0, t1 = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise StoreFormatError(f"{path}: not a store file (bad magic {magic!r})")
    if version != VERSION:
        raise StoreFormatError(f"{path}: store version {version}, expected {VERSION}")
    end = _HEADER.size + n * _RECORD.itemsize
    if end > len(buf):
        raise StoreFormatError(f"{path}: truncated event records")
    rec = np.frombuffer(buf, dtype=_RECORD, count=n, offset=_HEADER.size)
    user_labels, pos = _read_table(buf, end, path)
    url_labels, pos = _read_table(buf, pos, path)
    if pos != len(buf):
        raise StoreFormatError(f"{path}: {len(buf) - pos} trailing bytes")
    return EventStore(
        rec["user"].astype(np.int64),
        rec["url"].astype(np.int64),
        rec["t"].astype(np.int64),
        (t0, t1),
        user_labels,
        url_labels,
    )
