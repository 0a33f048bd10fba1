"""
Daily and hourly rhythm of a click log
======================================

Build a synthetic log with quiet weekends and a midday dip, then look at
the profiles an analyst would plot.
"""

import numpy as np

from weblogdyn import TimeGrid, autocorrelation, compare_week, daily_series, day_of_week_profile, hourly_profile
from weblogdyn.synthgen import GeneratorSpec, VolumeSpec, generate

hourly = np.full(24, 0.15)
hourly[8:19] = 1.0
hourly[11:14] = 0.6   # lunch
spec = GeneratorSpec(
    n_days=84, seed=3,
    weekly_weights=(1, 1, 1, 1, 0.9, 0.4, 0.5),
    hourly_weights=tuple(hourly),
    volume=VolumeSpec(base_per_day=4000, n_users=2000, n_urls=3000),
)
store, truth = generate(spec)
grid = TimeGrid.for_store(store, spec.tz_offset)
print(store, "first local day is", grid.weekday(0))

series = daily_series(store, grid)
prof = day_of_week_profile(series)
for row in prof.rows():
    print("%s  mean %8.1f  sigma %6.1f" % (row[0], row[1], row[2]))

# a weekly rhythm shows up as a peak at lag 7
acf = autocorrelation(series.counts, 14)
print("autocorrelation lags 1-14:", np.round(acf[1:], 2))

# hour-by-hour averages per day class
for name, hp in hourly_profile(store, grid).items():
    print(f"{name:8s} busiest hour {int(np.argmax(hp.mean)):2d}, "
          f"daytime low at {8 + int(np.argmin(hp.mean[8:19])):2d}")

# how one week compares to the average week
for dev in compare_week(series, 28, prof):
    print(dev.date, dev.weekday, f"{dev.observed:7.0f}  z={dev.z:+.2f}")
