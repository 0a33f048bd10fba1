"""
From raw access log to statistics
=================================

Write a synthetic store out as an NCSA common log with some images, errors
and garbage mixed in, read it back, and check that nothing downstream
changed.
"""

import io
import tempfile
from pathlib import Path

import numpy as np

from weblogdyn import EventStore, fit_slope, ingest_files, lifetime_series, tau_c
from weblogdyn.synthgen import GapSpec, GeneratorSpec, UrlCohort, VolumeSpec, emit_ncsa, generate

spec = GeneratorSpec(
    n_days=42, seed=5,
    volume=VolumeSpec(base_per_day=1500, n_users=400, n_urls=600),
    gaps=GapSpec(kind="click", exponent=1.25, n_streams=200, events_per_stream=500),
    cohorts=[UrlCohort(n_urls=300, birth_day=10, death_day=30)],
)
store, truth = generate(spec)

buf = io.StringIO()
counts = emit_ncsa(store, buf, noise=0.1, seed=1)
print("emitted:", counts)
print(buf.getvalue().splitlines()[0])

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "access.log"
    path.write_text(buf.getvalue())
    back, report = ingest_files([path])
print("ingest report:", report.to_dict())

# the log does not say when observation started, so reuse the original span
back = EventStore(back.users, back.urls, back.times, store.span)
print("same timestamps:", np.array_equal(back.times, store.times))

# background traffic mixes into the planted streams, so both read a bit shallower than -1.25
f1, f2 = fit_slope(tau_c(store).histogram()), fit_slope(tau_c(back).histogram())
print(f"click gaps slope: direct {f1.slope:.4f}, via text {f2.slope:.4f}")

ls = lifetime_series(back)
print("most URLs born on day", int(np.argmax(ls.first_seen[1:]) + 1),
      "and last seen on day", int(np.argmax(ls.last_seen[:-1])))
