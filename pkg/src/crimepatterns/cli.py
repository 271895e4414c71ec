"""Command-line front end.

Each subcommand drives one analysis module and writes its artifacts
into `--out` together with a `manifest.json` recording inputs (with
checksums), every parameter in effect, library versions, and artifact
checksums.  All randomness flows through explicit `--seed` style
parameters, so identical invocations produce identical artifacts; the
only non-reproducible manifest field is the creation timestamp.

Exit codes: 0 success, 1 module or I/O failure (structured message on
stderr), 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
from datetime import datetime, timezone

import numpy as np
import scipy

from . import __version__
from .concentration import fit_power_law, gof_bootstrap, likelihood_ratio, lorenz
from .independence import PairedSample, hoeffding_d, hoeffding_test
from .ingest import filter_events, parse_events, parse_population
from .rankdyn import position_entropy, weekly_ranks
from .rhythms import (
    CIRCANNUAL_BAND,
    DEFAULT_ALPHA_LEVEL,
    band_power,
    composed_power,
    cwt,
    detrend,
    fill_gaps,
    global_spectrum,
    significant_durations,
)
from .series import RegionSeriesSet, TimeSeries, WEEK_STEP_YEARS
from .synth import RNG_ALGORITHM, load_scenario, run_scenario
from .tessellate import assign_events, build_region_series, build_tessellation

REPORT_SOURCES = ("fit.json", "entropy_summary.json", "composed.csv", "durations.csv")


class UsageError(Exception):
    """Bad flag combinations that argparse alone cannot express."""


# ---------------------------------------------------------------------------
# formatting and hashing helpers


def _num(value) -> str:
    """Shortest-roundtrip decimal text for a float, plain text for ints."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _flag(value) -> str:
    return "true" if value else "false"


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _emit(out_dir, subcommand, inputs, parameters, payloads) -> None:
    """Write every artifact plus the manifest, atomically as a group.

    `payloads` maps file name to full text; nothing is written until
    all computation has finished, and a failure while writing removes
    whatever was already on disk so no partial run survives.  The
    manifest is an append-only log, one record per subcommand run, so a
    multi-step pipeline keeps the provenance of every artifact.  Inputs
    that live inside the output directory are recorded relative to it,
    which keeps the bundle self-contained and location-independent.
    """
    os.makedirs(out_dir, exist_ok=True)
    out_abs = os.path.abspath(out_dir)

    def describe(path):
        p = str(path)
        inside = os.path.dirname(os.path.abspath(p)) == out_abs
        return {
            "path": os.path.basename(p) if inside else p,
            "sha256": _sha256_file(p),
        }

    record = {
        "subcommand": subcommand,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "package": {"name": "crimepatterns", "version": __version__},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "inputs": {name: describe(path) for name, path in inputs.items()},
        "parameters": parameters,
        "artifacts": {name: _sha256_text(text) for name, text in payloads.items()},
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest = {"runs": []}
    if os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            try:
                manifest = json.load(fh)
            except json.JSONDecodeError:
                raise ValueError(f"{manifest_path} exists but is not valid JSON") from None
        if not isinstance(manifest.get("runs"), list):
            raise ValueError(f"{manifest_path} is not a manifest written by this tool")
    manifest["runs"].append(record)
    written = []
    try:
        for name, text in payloads.items():
            target = os.path.join(out_dir, name)
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            written.append(target)
        with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_json_text(manifest))
    except OSError:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise


# ---------------------------------------------------------------------------
# artifact readers and writers


def _read_rows(path: str, expected_header: list[str]) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != expected_header:
        raise ValueError(f"{path}: expected columns {','.join(expected_header)}")
    if len(rows) == 1:
        raise ValueError(f"{path}: no data rows")
    return rows[1:]


def _read_counts(path: str) -> np.ndarray:
    rows = _read_rows(path, ["count"])
    try:
        return np.array([int(r[0]) for r in rows], dtype=np.int64)
    except (ValueError, IndexError):
        raise ValueError(f"{path}: counts must be integers, one per row") from None


def _cell(text: str) -> float:
    return np.nan if text == "" else float(text)


def _week_grid(labels: list[str], path: str) -> np.ndarray:
    try:
        weeks = np.array(labels, dtype="datetime64[D]")
    except ValueError:
        raise ValueError(f"{path}: unparseable week_start column") from None
    if weeks.size > 1 and not (np.diff(weeks) == np.timedelta64(7, "D")).all():
        raise ValueError(f"{path}: week_start must advance by exactly 7 days")
    return weeks


def _read_series(path: str) -> TimeSeries:
    rows = _read_rows(path, ["week_start", "value"])
    weeks = _week_grid([r[0] for r in rows], path)
    try:
        values = np.array([_cell(r[1]) for r in rows])
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed value column") from None
    return TimeSeries(fill_gaps(values), WEEK_STEP_YEARS, weeks[0])


def _read_region_series(path: str) -> tuple[RegionSeriesSet, np.ndarray]:
    """Wide weekly table -> (region set, city column)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if (
        len(header) < 3
        or header[0] != "week_start"
        or header[-1] != "city"
        or not all(c.startswith("region_") for c in header[1:-1])
    ):
        raise ValueError(f"{path}: expected week_start,region_<id>...,city columns")
    try:
        region_ids = np.array([int(c[len("region_"):]) for c in header[1:-1]])
    except ValueError:
        raise ValueError(f"{path}: malformed region column name") from None
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: ragged rows")
    weeks = _week_grid([r[0] for r in body], path)
    try:
        table = np.array([[_cell(v) for v in r[1:]] for r in body])
    except ValueError:
        raise ValueError(f"{path}: malformed numeric cell") from None
    counts = table[:, :-1].T
    city = table[:, -1]
    return RegionSeriesSet(weeks, counts, region_ids), city


def _read_pairs(path: str) -> PairedSample:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or "x" not in rows[0] or "y" not in rows[0]:
        raise ValueError(f"{path}: expected a header with x and y columns")
    ix, iy = rows[0].index("x"), rows[0].index("y")
    try:
        x = [float(r[ix]) for r in rows[1:]]
        y = [float(r[iy]) for r in rows[1:]]
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed pair row") from None
    return PairedSample(np.array(x), np.array(y))


def _series_csv(ts: TimeSeries) -> str:
    weeks = ts.week_starts()
    rows = [[str(w), _num(v)] for w, v in zip(weeks, ts.values)]
    return _csv_text(["week_start", "value"], rows)


def _region_series_csv(series_set: RegionSeriesSet) -> str:
    header = ["week_start"]
    header += [f"region_{rid}" for rid in series_set.region_ids]
    header += ["city"]
    city = series_set.city_totals()
    rows = []
    for t, week in enumerate(series_set.week_starts):
        row = [str(week)]
        row += [_num(v) for v in series_set.counts[:, t]]
        row.append(_num(city[t]))
        rows.append(row)
    return _csv_text(header, rows)


def _tessellation_csv(tess) -> str:
    rows = [
        [
            str(r.id),
            _num(r.lon_min),
            _num(r.lat_min),
            _num(r.lon_max),
            _num(r.lat_max),
            _num(r.population),
        ]
        for r in tess.regions
    ]
    return _csv_text(
        ["region_id", "lon_min", "lat_min", "lon_max", "lat_max", "population"], rows
    )


def _band_arg(text: str) -> tuple:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"band must look like 0.8:1.1, got {text!r}"
        ) from None
    return (lo, hi)


# ---------------------------------------------------------------------------
# pipelines shared by subcommands


def _load_events(args):
    table = parse_events(args.events)
    if args.category is not None:
        table = filter_events(table, category=args.category)
    return table


def _tessellate_events(args):
    table = _load_events(args)
    cells = parse_population(args.population)
    tess = build_tessellation(cells, args.target_pop)
    return table, tess


def _events_inputs(args) -> dict:
    return {"events": args.events, "population": args.population}


def _events_parameters(args) -> dict:
    return {"target_pop": args.target_pop, "category": args.category}


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> None:
    spec = load_scenario(args.scenario)
    result = run_scenario(spec)
    payloads = {}
    if spec.kind == "powerlaw_counts":
        payloads["counts.csv"] = _csv_text(["count"], [[str(int(v))] for v in result])
    elif spec.kind in ("ar1", "seasonal"):
        payloads["series.csv"] = _series_csv(result)
    else:
        payloads["region_series.csv"] = _region_series_csv(result)
    parameters = {
        "kind": spec.kind,
        "seed": spec.seed,
        "rng": RNG_ALGORITHM,
        "scenario": dict(spec.parameters),
    }
    _emit(args.out, "simulate", {"scenario": args.scenario}, parameters, payloads)


def cmd_tessellate(args) -> None:
    table, tess = _tessellate_events(args)
    series_set = build_region_series(table, tess)
    payloads = {
        "tessellation.csv": _tessellation_csv(tess),
        "region_series.csv": _region_series_csv(series_set),
    }
    if table.rejections:
        payloads["rejects.csv"] = _csv_text(
            ["row", "reason"], [[str(r.row), r.reason] for r in table.rejections]
        )
    parameters = _events_parameters(args)
    parameters["stats"] = {
        "n_events": len(table),
        "n_rejected": len(table.rejections),
        "n_regions": tess.n_regions,
        "events_outside_area": series_set.meta["events_outside_area"],
        "events_in_partial_weeks": series_set.meta["events_in_partial_weeks"],
    }
    _emit(args.out, "tessellate", _events_inputs(args), parameters, payloads)


def cmd_concentrate(args) -> None:
    if (args.counts is None) == (args.events is None):
        raise UsageError("concentrate needs exactly one of --counts or --events")
    if args.counts is not None:
        counts = _read_counts(args.counts)
        inputs = {"counts": args.counts}
        parameters = {}
    else:
        if args.population is None:
            raise UsageError("--events also needs --population and --target-pop")
        table, tess = _tessellate_events(args)
        counts = assign_events(table, tess).region_counts
        inputs = _events_inputs(args)
        parameters = _events_parameters(args)
    curve = lorenz(counts)
    fit = fit_power_law(counts)
    comparisons = {}
    for alternative in ("exponential", "lognormal"):
        res = likelihood_ratio(counts, fit, alternative, significance=args.alpha_level)
        comparisons[f"lr_{alternative}"] = {
            "stat": float(res.statistic),
            "p": float(res.p_value),
            "favored": alternative if res.favored == "alternative" else res.favored,
        }
    gof_p = gof_bootstrap(counts, fit, n_boot=args.boot, seed=args.seed, workers=args.workers)
    report = {
        "alpha": float(fit.alpha),
        "xmin": int(fit.xmin),
        "ks": float(fit.ks_statistic),
        "n_tail": int(fit.n_tail),
        "gini": float(curve.gini),
        "gof_p": float(gof_p),
        **comparisons,
    }
    payloads = {
        "fit.json": _json_text(report),
        "lorenz.csv": _csv_text(
            ["region_share", "event_share"],
            [[_num(a), _num(b)] for a, b in curve.points],
        ),
    }
    parameters.update(
        {
            "alpha_level": args.alpha_level,
            "boot": args.boot,
            "seed": args.seed,
            "workers": args.workers,
            "rng": RNG_ALGORITHM,
        }
    )
    _emit(args.out, "concentrate", inputs, parameters, payloads)


def cmd_ranks(args) -> None:
    series_set, _ = _read_region_series(args.region_series)
    profile = position_entropy(weekly_ranks(series_set))
    payloads = {
        "entropy.csv": _csv_text(
            ["position", "entropy"],
            [[str(i + 1), _num(h)] for i, h in enumerate(profile.h)],
        ),
        "entropy_summary.json": _json_text(
            {
                "mean_h": float(profile.mean_h),
                "h_top10": [float(h) for h in profile.h[:10]],
            }
        ),
    }
    _emit(args.out, "ranks", {"region_series": args.region_series}, {}, payloads)


def cmd_rhythms(args) -> None:
    if (args.series is None) == (args.region_series is None):
        raise UsageError("rhythms needs exactly one of --series or --region-series")
    if args.series is not None:
        ts = _read_series(args.series)
        inputs = {"series": args.series}
    else:
        series_set, city = _read_region_series(args.region_series)
        ts = TimeSeries(fill_gaps(city), WEEK_STEP_YEARS, series_set.week_starts[0])
        inputs = {"region_series": args.region_series}
    anomaly = detrend(ts)
    field = cwt(anomaly, required_band=args.band)
    spectrum = global_spectrum(field, args.alpha_level)
    bp = band_power(field, args.band, args.alpha_level)
    weeks = ts.week_starts()
    payloads = {
        "spectrum.csv": _csv_text(
            ["scale_years", "power", "significance"],
            [
                [_num(s), _num(p), _num(q)]
                for s, p, q in zip(spectrum.scales, spectrum.power, spectrum.significance)
            ],
        ),
        "band.csv": _csv_text(
            ["week_start", "power", "threshold", "significant", "coi_valid"],
            [
                [str(w), _num(p), _num(bp.threshold), _flag(s), _flag(v)]
                for w, p, s, v in zip(weeks, bp.power, bp.significant, bp.coi_valid)
            ],
        ),
    }
    parameters = {"band": list(args.band), "alpha_level": args.alpha_level}
    _emit(args.out, "rhythms", inputs, parameters, payloads)


def cmd_composed(args) -> None:
    series_set, _ = _read_region_series(args.region_series)
    composed = composed_power(series_set, band=args.band, alpha_level=args.alpha_level)
    runs = significant_durations(composed)
    payloads = {
        "composed.csv": _csv_text(
            ["week_start", "c_b", "regions_valid"],
            [
                [str(w), str(int(c)), str(int(v))]
                for w, c, v in zip(composed.week_starts, composed.c_b, composed.regions_valid)
            ],
        ),
        "durations.csv": _csv_text(
            ["region_id", "run_start", "run_length_weeks"],
            [
                [str(r.region_id), str(composed.week_starts[r.start]), str(r.length)]
                for r in runs
            ],
        ),
    }
    parameters = {
        "band": list(args.band),
        "alpha_level": args.alpha_level,
        "rejected_regions": [[rid, reason] for rid, reason in composed.rejected],
    }
    _emit(args.out, "composed", {"region_series": args.region_series}, parameters, payloads)


def cmd_independence(args) -> None:
    sample = _read_pairs(args.pairs)
    d_stat = hoeffding_d(sample)
    p_value = hoeffding_test(sample, n_perm=args.perm, seed=args.seed)
    payloads = {
        "independence.json": _json_text(
            {
                "D": float(d_stat),
                "p_value": float(p_value),
                "n": len(sample),
                "n_perm": args.perm,
                "decision": "dependent" if p_value <= args.alpha_level else "independent",
            }
        )
    }
    parameters = {
        "alpha_level": args.alpha_level,
        "perm": args.perm,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    }
    _emit(args.out, "independence", {"pairs": args.pairs}, parameters, payloads)


def cmd_report(args) -> None:
    present = {
        name: os.path.join(args.out, name)
        for name in REPORT_SOURCES
        if os.path.exists(os.path.join(args.out, name))
    }
    missing = [name for name in REPORT_SOURCES if name not in present]
    if not present:
        raise ValueError(
            "no upstream artifacts in the output directory; missing "
            + ", ".join(missing)
        )
    summary = {
        "gini": None,
        "alpha": None,
        "mean_h": None,
        "c_b_cv": None,
        "median_dt": None,
        "missing": missing,
    }
    if "fit.json" in present:
        with open(present["fit.json"], encoding="utf-8") as fh:
            fit = json.load(fh)
        summary["gini"] = fit["gini"]
        summary["alpha"] = fit["alpha"]
    if "entropy_summary.json" in present:
        with open(present["entropy_summary.json"], encoding="utf-8") as fh:
            summary["mean_h"] = json.load(fh)["mean_h"]
    if "composed.csv" in present:
        rows = _read_rows(present["composed.csv"], ["week_start", "c_b", "regions_valid"])
        c_b = np.array([int(r[1]) for r in rows])
        valid = np.array([int(r[2]) for r in rows])
        interior = c_b[valid == valid.max()]
        if interior.size and interior.mean() > 0:
            summary["c_b_cv"] = float(interior.std() / interior.mean())
    if "durations.csv" in present:
        with open(present["durations.csv"], newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["region_id", "run_start", "run_length_weeks"]:
            raise ValueError(f"{present['durations.csv']}: unexpected columns")
        lengths = [int(r[2]) for r in rows[1:]]
        if lengths:
            summary["median_dt"] = float(np.median(lengths))
    payloads = {"report.json": _json_text(summary)}
    _emit(args.out, "report", present, {"sources": sorted(present)}, payloads)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crimepatterns",
        description="Concentration and rhythm statistics for point-event data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", required=True, help="output directory for artifacts")
        return p

    p = add("tessellate", cmd_tessellate, "build equal-population regions and weekly series")
    p.add_argument("--events", required=True)
    p.add_argument("--population", required=True)
    p.add_argument("--target-pop", type=float, required=True, dest="target_pop")
    p.add_argument("--category", default=None)

    p = add("concentrate", cmd_concentrate, "Lorenz/Gini and power-law tail fit")
    p.add_argument("--counts", default=None, help="region totals, one 'count' column")
    p.add_argument("--events", default=None)
    p.add_argument("--population", default=None)
    p.add_argument("--target-pop", type=float, default=None, dest="target_pop")
    p.add_argument("--category", default=None)
    p.add_argument("--alpha-level", type=float, default=DEFAULT_ALPHA_LEVEL, dest="alpha_level")
    p.add_argument("--boot", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = add("ranks", cmd_ranks, "weekly rank-position entropy per region")
    p.add_argument("--region-series", required=True, dest="region_series")

    p = add("rhythms", cmd_rhythms, "wavelet spectrum and band power of one series")
    p.add_argument("--series", default=None, help="week_start,value series")
    p.add_argument("--region-series", default=None, dest="region_series",
                   help="wide weekly table; the city column is analyzed")
    p.add_argument("--band", type=_band_arg, default=CIRCANNUAL_BAND)
    p.add_argument("--alpha-level", type=float, default=DEFAULT_ALPHA_LEVEL, dest="alpha_level")

    p = add("composed", cmd_composed, "per-week count of regions with a significant band")
    p.add_argument("--region-series", required=True, dest="region_series")
    p.add_argument("--band", type=_band_arg, default=CIRCANNUAL_BAND)
    p.add_argument("--alpha-level", type=float, default=DEFAULT_ALPHA_LEVEL, dest="alpha_level")

    p = add("independence", cmd_independence, "Hoeffding D permutation test on x,y pairs")
    p.add_argument("--pairs", required=True, help="CSV with x and y columns")
    p.add_argument("--perm", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha-level", type=float, default=DEFAULT_ALPHA_LEVEL, dest="alpha_level")

    p = add("simulate", cmd_simulate, "run a seeded synthetic scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON")

    add("report", cmd_report, "aggregate artifacts in --out into report.json")

    return parser


_ERROR_MODULES = {
    "tessellate": "tessellate",
    "concentrate": "concentration",
    "ranks": "rankdyn",
    "rhythms": "rhythms",
    "composed": "rhythms",
    "independence": "independence",
    "simulate": "synth",
    "report": "report",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        module = _ERROR_MODULES[args.subcommand]
        print(f"error: {module}: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
