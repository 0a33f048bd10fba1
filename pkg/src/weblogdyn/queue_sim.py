"""Priority-queue model of task execution with a batch of ``nu`` tasks per step.

An agent keeps a list of ``L`` tasks, each carrying a random priority.  At every
step ``nu`` tasks are chosen one after another without replacement: with
probability ``p`` the highest-priority remaining task, otherwise a uniformly
random remaining one.  Once the whole batch has been chosen the freed slots are
refilled with fresh tasks, which therefore cannot run in the step they arrive.
With ``nu = 1`` this is the classic single-task priority queue.

Random stream
-------------
Both implementations draw from the same SplitMix64 stream, in this order:

1. ``L`` draws for the initial priorities (slot order);
2. for each selection in a step: one draw for the priority/random decision
   (priority iff ``u < p``), then one more draw for the pick when random;
3. after the batch, one draw per refilled slot, in selection order.

A random pick with ``m`` tasks remaining takes the ``floor(u * m)``-th remaining
slot in slot order.  Priority ties go to the older task, then the lower slot.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .powerlaw import PowerLawFit, fit_slope, log_bin

__all__ = [
    "QueueConfig",
    "WaitSample",
    "SplitMix64",
    "simulate",
    "simulate_naive",
    "NaiveQueue",
    "exponent_sweep",
]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QueueConfig:
    L: int = 100
    p: float = 0.99999
    nu: int = 1
    steps: int = 10_000_000
    seed: int = 0
    priority_law: str = "uniform"

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("queue length L must be >= 1")
        if not 1 <= self.nu <= self.L:
            raise ConfigError(f"nu must satisfy 1 <= nu <= L (got nu={self.nu}, L={self.L})")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        if self.priority_law != "uniform":
            raise ConfigError(f"unsupported priority law {self.priority_law!r}")
        if not 0 <= self.seed <= _MASK:
            raise ConfigError("seed must fit in 64 unsigned bits")


@dataclass
class WaitSample:
    """Recorded waiting times as a multiset: distinct ``values`` with ``counts``.

    ``censored`` counts tasks still queued when the run ends.
    """

    values: np.ndarray
    counts: np.ndarray
    censored: int
    config: QueueConfig | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def expand(self) -> np.ndarray:
        return np.repeat(self.values, self.counts)

    def __eq__(self, other):
        if not isinstance(other, WaitSample):
            return NotImplemented
        return (
            self.censored == other.censored
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.counts, other.counts)
        )


class SplitMix64:
    """Pure-Python SplitMix64; the jitted simulator inlines the same recurrence."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _M1) & _MASK
        z = ((z ^ (z >> 27)) * _M2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _INV53


# --------------------------------------------------------------------------
# fast path: numba, tournament tree for the argmax, rank arithmetic for picks


@njit(cache=True)
def _sm_next(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, float(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _better(prio, entry, a, b):
    # True when slot a outranks slot b
    if prio[a] != prio[b]:
        return prio[a] > prio[b]
    if entry[a] != entry[b]:
        return entry[a] < entry[b]
    return a < b


@njit(cache=True)
def _tree_update(tree, prio, entry, leaf):
    i = leaf >> 1
    while i >= 1:
        a = tree[2 * i]
        b = tree[2 * i + 1]
        if b < 0 or (a >= 0 and _better(prio, entry, a, b)):
            tree[i] = a
        else:
            tree[i] = b
        i >>= 1


@njit(cache=True)
def _simulate_fast(L, p, nu, steps, seed):
    state = np.uint64(seed)
    prio = np.empty(L, np.float64)
    entry = np.zeros(L, np.int64)
    for i in range(L):
        state, prio[i] = _sm_next(state)

    size = 1
    while size < L:
        size *= 2
    # leaves live at [size, 2*size); -1 marks an empty leaf
    tree = np.full(2 * size, -1, np.int64)
    for i in range(L):
        tree[size + i] = i
    for i in range(size - 1, 0, -1):
        a = tree[2 * i]
        b = tree[2 * i + 1]
        if b < 0 or (a >= 0 and _better(prio, entry, a, b)):
            tree[i] = a
        else:
            tree[i] = b

    counts = np.zeros(steps + 1, np.int64)
    chosen = np.empty(nu, np.int64)
    ranked = np.empty(nu, np.int64)
    for step in range(1, steps + 1):
        for j in range(nu):
            state, u = _sm_next(state)
            if u < p:
                slot = tree[1]
            else:
                state, u = _sm_next(state)
                s = int(u * (L - j))
                # ranked holds the j chosen slots sorted ascending
                for r in range(j):
                    if ranked[r] <= s:
                        s += 1
                    else:
                        break
                slot = s
            chosen[j] = slot
            k = j
            while k > 0 and ranked[k - 1] > slot:
                ranked[k] = ranked[k - 1]
                k -= 1
            ranked[k] = slot
            counts[step - entry[slot]] += 1
            prio[slot] = -1.0
            _tree_update(tree, prio, entry, size + slot)
        for j in range(nu):
            slot = chosen[j]
            state, prio[slot] = _sm_next(state)
            entry[slot] = step
            _tree_update(tree, prio, entry, size + slot)
    return counts


def _to_sample(counts: np.ndarray, config: QueueConfig) -> WaitSample:
    values = np.flatnonzero(counts).astype(np.int64)
    return WaitSample(values, counts[values].astype(np.int64), config.L, config)


def simulate(config: QueueConfig) -> WaitSample:
    """Run the model and return the waiting times of every executed task."""
    counts = _simulate_fast(config.L, float(config.p), config.nu, config.steps, np.uint64(config.seed))
    return _to_sample(counts, config)


# --------------------------------------------------------------------------
# reference path: plain Python, linear scans


class NaiveQueue:
    """Step-by-step reference implementation; slow, but easy to audit."""

    def __init__(self, config: QueueConfig):
        self.config = config
        self.rng = SplitMix64(config.seed)
        self.prio = [self.rng.random() for _ in range(config.L)]
        self.entry = [0] * config.L
        self.step_no = 0

    def _best(self, remaining):
        best = remaining[0]
        for slot in remaining[1:]:
            if (self.prio[slot], -self.entry[slot], -slot) > (
                self.prio[best],
                -self.entry[best],
                -best,
            ):
                best = slot
        return best

    def step(self) -> list[tuple[int, int]]:
        """Advance one step; return ``(slot, wait)`` for each executed task."""
        cfg = self.config
        self.step_no += 1
        taken = [False] * cfg.L
        executed = []
        for _ in range(cfg.nu):
            remaining = [s for s in range(cfg.L) if not taken[s]]
            if self.rng.random() < cfg.p:
                slot = self._best(remaining)
            else:
                slot = remaining[int(self.rng.random() * len(remaining))]
            taken[slot] = True
            executed.append((slot, self.step_no - self.entry[slot]))
        for slot, _ in executed:
            self.prio[slot] = self.rng.random()
            self.entry[slot] = self.step_no
        return executed


def simulate_naive(config: QueueConfig) -> WaitSample:
    q = NaiveQueue(config)
    counts = np.zeros(config.steps + 1, np.int64)
    for _ in range(config.steps):
        for _, wait in q.step():
            counts[wait] += 1
    return _to_sample(counts, config)


# --------------------------------------------------------------------------


def _run_and_fit(args):
    config, fit_range, b = args
    sample = simulate(config)
    hist = log_bin(sample.values, b=b, x_min=1, weights=sample.counts, discrete=True)
    return fit_slope(hist, fit_range)


def sweep_seeds(seed: int, n: int) -> list[int]:
    """Independent per-run seeds derived from one base seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def exponent_sweep(
    base: QueueConfig,
    nu_values,
    fit_range=(2, 1e3),
    b: float = 1.3,
    workers: int = 1,
) -> dict[int, PowerLawFit]:
    """Fitted waiting-time slope for each ``nu``; each run gets its own seed."""
    nu_values = list(nu_values)
    seeds = sweep_seeds(base.seed, len(nu_values))
    jobs = [
        (
            QueueConfig(base.L, base.p, nu, base.steps, s, base.priority_law),
            fit_range,
            b,
        )
        for nu, s in zip(nu_values, seeds)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            fits = list(pool.map(_run_and_fit, jobs))
    else:
        fits = [_run_and_fit(j) for j in jobs]
    return dict(zip(nu_values, fits))
