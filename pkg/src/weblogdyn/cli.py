"""Command-line entry point: ``weblogdyn <subcommand> [options]``.

Exit status is 0 on success, 2 on usage errors and 1 on data errors
(unreadable or malformed input, too little data for an analysis).
Default option values can be supplied as a JSON object in the file named by
the ``WEBLOGDYN_CONFIG`` environment variable; keys are option destinations
(``tz_offset``, ``b``, ...) and apply to every subcommand that has them.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import interevent, lifetime, prefattach, queue_sim, synthgen, temporal
from .core import DEFAULT_TZ_OFFSET, TimeGrid
from .errors import WeblogError
from .ingest import DEFAULT_EXTENSIONS, AnonymizerState, UrlFilter, ingest_files, load_store, save_store
from .outputs import __version__, atomic_write_text, write_csv, write_json
from .powerlaw import DEFAULT_GROWTH, fit_mle, fit_slope, log_bin

CONFIG_ENV = "WEBLOGDYN_CONFIG"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Fully materialized options of one invocation."""

    subcommand: str
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, **self.options}


# ---- helpers


def _fit_range(args):
    if args.fit_min is None and args.fit_max is None:
        return None
    if args.fit_min is None or args.fit_max is None:
        raise UsageError("--fit-min and --fit-max go together")
    if not 0 < args.fit_min < args.fit_max:
        raise UsageError("fit range must satisfy 0 < min < max")
    return (args.fit_min, args.fit_max)


def _sibling(path, suffix):
    return str(Path(path).with_suffix(suffix))


def _store_and_grid(args):
    store = load_store(args.store)
    return store, TimeGrid.for_store(store, args.tz_offset)


def _fit(hist, x_range, method):
    return fit_mle(hist, x_range) if method == "mle" else fit_slope(hist, x_range)


def _hist_outputs(args, cfg, hist, fit):
    write_csv(args.out, ("bin_lo", "bin_hi", "count", "density"), hist.rows(), cfg)
    summary = fit.to_dict()
    summary.update(range=summary.pop("x_range"), samples=hist.total, rejected=hist.rejected)
    write_json(args.fit or _sibling(args.out, ".json"), summary, cfg)


# ---- subcommands


def cmd_ingest(args, cfg):
    exts = DEFAULT_EXTENSIONS if args.extensions is None else [e for e in args.extensions.split(",") if e]
    state = AnonymizerState(salt=args.salt)
    if args.state and os.path.exists(args.state):
        state = AnonymizerState.load(args.state)
    store, report = ingest_files(
        args.inputs,
        UrlFilter(frozenset(exts), strip_query=not args.keep_query),
        state,
        keep_all_statuses=args.status_mode == "keep-all",
        fmt=args.format,
    )
    save_store(store, args.out)
    if args.state:
        state.save(args.state)
    write_json(args.report or _sibling(args.out, ".report.json"), report.to_dict(), cfg)


def cmd_daily(args, cfg):
    store, grid = _store_and_grid(args)
    s = temporal.daily_series(store, grid)
    write_csv(args.out, ("date", "count"), ((d.isoformat(), int(c)) for d, c in zip(s.dates, s.counts)), cfg)


def cmd_dow(args, cfg):
    store, grid = _store_and_grid(args)
    prof = temporal.day_of_week_profile(temporal.daily_series(store, grid))
    write_csv(args.out, ("day", "mean", "sigma", "band", "n"), prof.rows(), cfg)


def cmd_hourly(args, cfg):
    store, grid = _store_and_grid(args)
    prof = temporal.hourly_profile(store, grid)
    rows = ((name, h, float(p.mean[h])) for name, p in prof.items() for h in range(24))
    write_csv(args.out, ("class", "hour", "mean"), rows, cfg)


def cmd_week_compare(args, cfg):
    store, grid = _store_and_grid(args)
    series = temporal.daily_series(store, grid)
    prof = temporal.day_of_week_profile(series)
    try:
        start = temporal.day_index_of(series, _dt.date.fromisoformat(args.start))
    except ValueError as exc:
        raise WeblogError(str(exc)) from None
    devs = temporal.compare_week(series, start, prof)
    rows = ((d.date.isoformat(), d.observed, d.mean, d.z) for d in devs)
    write_csv(args.out, ("date", "observed", "mean", "z"), rows, cfg)


def cmd_tau(args, cfg):
    store = load_store(args.store)
    sample = interevent.inter_event(store, args.kind)
    hist = sample.histogram(args.b)
    _hist_outputs(args, cfg, hist, _fit(hist, _fit_range(args), args.method))


def cmd_prefattach(args, cfg):
    store, grid = _store_and_grid(args)
    curve = prefattach.delta_curve(store, args.target, grid, b=args.b, window=args.window, mode=args.mode,
                                   x_range=_fit_range(args))
    write_csv(args.out, ("x_bin_center", "mean_dx", "n"), curve.rows(), cfg)
    fit = curve.fit_dict()
    fit["nonlinear"] = curve.nonlinear
    write_json(args.fit or _sibling(args.out, ".json"), fit, cfg)


def cmd_distributions(args, cfg):
    store, grid = _store_and_grid(args)
    pair = prefattach.windowed_distributions(store, args.target, grid, window=args.window)
    write_csv(args.out, ("x", "C_weekly", "C_full"), pair.rows(), cfg)
    if args.fit:
        cmp = prefattach.compare_window_slopes(pair, b=args.b, n_boot=args.n_boot, seed=args.seed)
        write_json(args.fit, cmp.to_dict(), cfg)


def cmd_lifetime(args, cfg):
    store, grid = _store_and_grid(args)
    ls = lifetime.lifetime_series(store, grid)
    write_csv(args.out, ("day", "first_seen", "last_seen"), ls.rows(), cfg)
    if args.urls:
        lines = ["url_id\tfirst_day\tlast_day\tclicks\tcensored_flags"]
        lines += ["\t".join(str(v) for v in row) for row in ls.url_rows()]
        atomic_write_text(args.urls, "\n".join(lines) + "\n")


def _queue_config(args, nu=None, seed=None):
    try:
        return queue_sim.QueueConfig(
            L=args.tasks, p=args.p, nu=args.nu if nu is None else nu, steps=args.steps,
            seed=args.seed if seed is None else seed,
        )
    except queue_sim.ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, cfg):
    config = _queue_config(args)
    sample = queue_sim.simulate(config)
    hist = log_bin(sample.values, b=args.b, x_min=1, weights=sample.counts, discrete=True)
    fit = _fit(hist, _fit_range(args) or (2, 1e3), args.method)
    write_csv(args.out, ("bin_lo", "bin_hi", "count", "density"), hist.rows(), cfg)
    summary = fit.to_dict()
    summary.update(range=summary.pop("x_range"), recorded=sample.n, censored=sample.censored)
    write_json(args.fit or _sibling(args.out, ".json"), summary, cfg)
    if args.waits:
        write_csv(args.waits, ("tau", "count"), zip(sample.values.tolist(), sample.counts.tolist()), cfg)


def cmd_sweep(args, cfg):
    base = _queue_config(args, nu=1)
    fits = queue_sim.exponent_sweep(base, args.nu_values, _fit_range(args) or (2, 1e3), args.b, args.workers)
    table = [{"nu": nu, **f.to_dict()} for nu, f in fits.items()]
    write_json(args.out, {"runs": table}, cfg)


def cmd_generate(args, cfg):
    try:
        with open(args.spec) as fh:
            spec = synthgen.GeneratorSpec.from_dict(json.load(fh))
        if args.seed is not None:
            spec = synthgen.GeneratorSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    except (TypeError, KeyError) as exc:
        raise UsageError(f"bad generator spec: {exc}") from None
    store, truth = synthgen.generate(spec)
    if args.out:
        save_store(store, args.out)
    if args.truth:
        atomic_write_text(args.truth, truth.to_json())
    ncsa = args.ncsa if args.ncsa is not None else (None if args.out else "-")
    if ncsa == "-":
        synthgen.emit_ncsa(store, sys.stdout, spec.tz_offset, args.noise, args.noise_seed)
        sys.stdout.flush()
    elif ncsa:
        buf = io.StringIO()
        synthgen.emit_ncsa(store, buf, spec.tz_offset, args.noise, args.noise_seed)
        atomic_write_text(ncsa, buf.getvalue())


def cmd_profile(args, cfg):
    store, grid = _store_and_grid(args)
    prof = interevent.user_profile(store, args.user, grid)
    write_csv(args.out, ("timestamp", "cumulative"), zip(prof.timestamps.tolist(), prof.cumulative.tolist()), cfg)
    summary = {
        "user_id": prof.user_id,
        "clicks": len(prof.timestamps),
        "cv": prof.cv,
        "max_per_minute": prof.max_per_minute,
        "active_days": prof.active_days,
    }
    write_json(args.fit or _sibling(args.out, ".json"), summary, cfg)


# ---- parser


def _positive_float(text):
    v = float(text)
    if not v > 1:
        raise argparse.ArgumentTypeError("binning factor must exceed 1")
    return v


def _nu_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weblogdyn", description="Click-stream dynamics toolkit.")
    p.add_argument("--version", action="store_true", help="print version information as JSON and exit")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=func)
        return sp

    def store_opts(sp, out, tz=True):
        sp.add_argument("--store", required=True, help="binary store file")
        sp.add_argument("--out", default=out, help=f"output CSV (default {out})")
        if tz:
            sp.add_argument("--tz-offset", type=int, default=DEFAULT_TZ_OFFSET,
                            help="seconds east of UTC for day boundaries")

    def fit_opts(sp, method=True):
        sp.add_argument("--b", type=_positive_float, default=DEFAULT_GROWTH, help="log-bin growth factor")
        sp.add_argument("--fit-min", type=float, default=None)
        sp.add_argument("--fit-max", type=float, default=None)
        if method:
            sp.add_argument("--method", choices=("lsq", "mle"), default="lsq")
        sp.add_argument("--fit", default=None, help="fit summary JSON (default: next to --out)")

    sp = add("ingest", cmd_ingest, "parse NCSA or TSV logs into a binary store")
    sp.add_argument("inputs", nargs="+", help="log files; '-' reads standard input")
    sp.add_argument("--out", required=True, help="store file to write")
    sp.add_argument("--report", default=None, help="ingest report JSON (default: next to --out)")
    sp.add_argument("--extensions", default=None, help="comma-separated accepted page extensions")
    sp.add_argument("--keep-query", action="store_true", help="keep query strings in urls")
    sp.add_argument("--status-mode", choices=("drop-errors", "keep-all"), default="drop-errors")
    sp.add_argument("--format", choices=("auto", "ncsa", "tsv"), default="auto")
    sp.add_argument("--state", default=None, help="anonymizer state JSON to load and update")
    sp.add_argument("--salt", default="", help="key for hashing host names")

    store_opts(add("daily", cmd_daily, "clicks per day"), "daily.csv")
    store_opts(add("dow", cmd_dow, "day-of-week mean and deviation"), "dow.csv")
    store_opts(add("hourly", cmd_hourly, "average clicks per hour by day class"), "hourly.csv")
    sp = add("week-compare", cmd_week_compare, "one week against the average week")
    store_opts(sp, "week_compare.csv")
    sp.add_argument("--start", required=True, help="first date of the week, YYYY-MM-DD")

    sp = add("tau", cmd_tau, "inter-event time histogram and power-law fit")
    store_opts(sp, "tau.csv", tz=False)
    sp.add_argument("--kind", choices=(interevent.VISIT, interevent.CLICK), required=True)
    fit_opts(sp)

    sp = add("prefattach", cmd_prefattach, "growth curve <dx>(x) and its linear fit")
    store_opts(sp, "prefattach.csv")
    sp.add_argument("--target", choices=[t.value for t in prefattach.PrefTarget], required=True)
    sp.add_argument("--window", type=int, default=7)
    sp.add_argument("--mode", choices=("sliding", "disjoint"), default="sliding")
    fit_opts(sp, method=False)

    sp = add("distributions", cmd_distributions, "weekly-window and full-span C(x)")
    store_opts(sp, "distributions.csv")
    sp.add_argument("--target", choices=[t.value for t in prefattach.PrefTarget], required=True)
    sp.add_argument("--window", type=int, default=7)
    sp.add_argument("--b", type=_positive_float, default=DEFAULT_GROWTH)
    sp.add_argument("--fit", default=None, help="write slope comparison JSON here")
    sp.add_argument("--n-boot", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("lifetime", cmd_lifetime, "first-seen and last-seen urls per day")
    store_opts(sp, "lifetime.csv")
    sp.add_argument("--urls", default=None, help="optional per-url TSV")

    def queue_opts(sp):
        sp.add_argument("--tasks", type=int, default=100)
        sp.add_argument("--p", type=float, default=0.99999)
        sp.add_argument("--steps", type=int, default=10_000_000)
        sp.add_argument("--seed", type=int, default=0)

    sp = add("simulate", cmd_simulate, "priority-queue waiting times")
    queue_opts(sp)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--out", default="hist.csv")
    sp.add_argument("--waits", default=None, help="optional raw (tau, count) CSV")
    fit_opts(sp)

    sp = add("sweep", cmd_sweep, "waiting-time slope for several batch sizes")
    queue_opts(sp)
    sp.add_argument("--nu", dest="nu_values", type=_nu_list, default=[1, 2, 3, 4, 5])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", default="sweep.json")
    fit_opts(sp, method=False)

    sp = add("generate", cmd_generate, "synthetic store with planted dynamics")
    sp.add_argument("--spec", required=True, help="generator spec JSON")
    sp.add_argument("--seed", type=int, default=None, help="override the seed in the generator file")
    sp.add_argument("--out", default=None, help="binary store file")
    sp.add_argument("--truth", default=None, help="ground-truth manifest JSON")
    sp.add_argument("--ncsa", default=None, help="NCSA text output; '-' for standard output")
    sp.add_argument("--noise", type=float, default=0.0, help="fraction of extra lines ingestion must discard")
    sp.add_argument("--noise-seed", type=int, default=0)

    sp = add("profile", cmd_profile, "click history of one user")
    store_opts(sp, "profile.csv")
    sp.add_argument("--user", type=int, required=True)
    sp.add_argument("--fit", default=None, help="metrics JSON (default: next to --out)")
    return p


def _env_defaults(parser):
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return
    try:
        with open(path) as fh:
            defaults = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {CONFIG_ENV}={path}: {exc}") from None
    if not isinstance(defaults, dict):
        raise UsageError(f"{CONFIG_ENV} must name a JSON object")
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in known})


def version_info() -> dict:
    import numba
    import scipy

    return {"tool": "weblogdyn", "version": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        _env_defaults(parser)
    except UsageError as exc:
        print(f"weblogdyn: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.version:
        print(json.dumps(version_info(), sort_keys=True))
        return 0
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 2
    opts = {k: v for k, v in vars(args).items() if k not in ("func", "version", "subcommand")}
    cfg = RunConfig(args.subcommand, opts).to_dict()
    try:
        args.func(args, cfg)
    except UsageError as exc:
        print(f"weblogdyn {args.subcommand}: {exc}", file=sys.stderr)
        return 2
    except (WeblogError, OSError, ValueError) as exc:
        print(f"weblogdyn {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
