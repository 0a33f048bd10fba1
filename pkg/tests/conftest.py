import numpy as np
import pytest

from weblogdyn import EventStore, TimeGrid

# local midnight of 2005-04-01 at UTC-4, as UTC epoch seconds
T0 = 1112328000
TZ = -14400
ACCEPTANCE_LINES = {}


def random_events(seed, n=3000, n_users=25, n_urls=40, n_days=21, t0=T0):
    rng = np.random.default_rng(seed)
    users = rng.integers(0, n_users, n)
    # a few heavy users so per-user streams are long
    users[: n // 4] = rng.integers(0, 3, n // 4)
    urls = rng.integers(0, n_urls, n)
    times = t0 + rng.integers(0, n_days * 86400, n)
    # same-second repeats exercise the zero-gap handling
    times[-50:] = times[:50]
    users[-50:], urls[-50:] = users[:50], urls[:50]
    return [(int(u), int(v), int(t)) for u, v, t in zip(users, urls, times)]


def store_of(events, span=None):
    a = np.array(events, dtype=np.int64).reshape(-1, 3)
    return EventStore(a[:, 0], a[:, 1], a[:, 2], span)


@pytest.fixture(scope="session")
def events():
    return random_events(7)


@pytest.fixture(scope="session")
def store(events):
    return store_of(events, (T0, T0 + 21 * 86400 - 1))


@pytest.fixture(scope="session")
def grid(store):
    return TimeGrid.for_store(store, TZ)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
