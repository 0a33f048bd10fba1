"""
Measuring preferential growth
=============================

Elements that were busy last week tend to gain more this week.  We plant a
linear rule ``<dx> = A x + B`` and a square-root rule, and check that the
estimator tells them apart.  Then we compare weekly and full-span
distributions for a stationary population and for aging URLs.
"""

from weblogdyn import compare_window_slopes, delta_curve, windowed_distributions
from weblogdyn.synthgen import GeneratorSpec, KernelSpec, VolumeSpec, generate

linear = generate(GeneratorSpec(n_days=60, seed=1, kernel=KernelSpec(n_pairs=10_000, A=0.1, B=0.5)))[0]
curve = delta_curve(linear, "w")
print(f"linear rule: A={curve.A:.3f} +- {curve.stderr_A:.3f}, B={curve.B:.3f}, curvature t={curve.curvature:.1f}")
for x, dx, n in list(curve.rows())[:8]:
    print(f"   x~{x:7.1f}  <dx>={dx:7.3f}  ({n} samples)")

sqrt = generate(GeneratorSpec(n_days=60, seed=1, kernel=KernelSpec(n_pairs=10_000, A=0.5, B=0.5, form="sqrt")))[0]
c2 = delta_curve(sqrt, "w")
print(f"sqrt rule:   curvature t={c2.curvature:.1f}, flagged nonlinear: {c2.nonlinear}")

# weekly vs full span for users whose activity never changes
stationary = generate(GeneratorSpec(n_days=28, seed=3, volume=VolumeSpec(
    base_per_day=30_000, n_users=20_000, user_exponent=2.2, n_urls=10**8)))[0]
cmp = compare_window_slopes(windowed_distributions(stationary, "k_ip"), n_boot=50)
print("stationary users:", {k: round(v, 3) for k, v in cmp.to_dict().items() if k.startswith(("slope", "z"))})

# URLs that live for 30 days
aging = generate(GeneratorSpec(n_days=112, seed=3, volume=VolumeSpec(
    base_per_day=20_000, n_users=10**7, n_urls=20_000, url_exponent=2.2, url_lifetime=30)))[0]
cmp = compare_window_slopes(windowed_distributions(aging, "k_url"), n_boot=50)
print("aging URLs:      ", {k: round(v, 3) for k, v in cmp.to_dict().items() if k.startswith(("slope", "z"))})
