"""Click-stream dynamics toolkit.

Ingests web-server access logs into a compact event store and measures
daily and hourly activity, inter-event time distributions, preferential
growth kernels, url lifetimes, and the waiting times of a priority-queue
model of task execution.  A synthetic generator with known parameters
drives end-to-end validation.
"""
from .core import DAY, DEFAULT_TZ_OFFSET, ClickEvent, EventStore, TimeGrid, build_store, day_of
from .errors import EmptyDataset, InsufficientData, NotFound, StoreFormatError, WeblogError
from .ingest import (
    AnonymizerState,
    IngestReport,
    UrlFilter,
    ingest_files,
    load_store,
    normalize_and_filter,
    parse_line,
    save_store,
)
from .interevent import InterEventSample, UserProfile, inter_event, tau_c, tau_v, user_profile
from .lifetime import LifetimeSeries, lifetime_series
from .outputs import __version__
from .powerlaw import (
    CumulativeDistribution,
    LogBinnedHistogram,
    PowerLawFit,
    cumulative,
    fit_cumulative,
    fit_mle,
    fit_slope,
    log_bin,
)
from .prefattach import (
    PrefAttachCurve,
    PrefTarget,
    accumulate_counts,
    compare_window_slopes,
    delta_curve,
    windowed_distributions,
)
from .queue_sim import QueueConfig, WaitSample, exponent_sweep, simulate, simulate_naive
from .synthgen import GeneratorSpec, GroundTruth, emit_ncsa, generate
from .temporal import (
    autocorrelation,
    compare_week,
    daily_series,
    day_of_week_profile,
    hourly_profile,
)
