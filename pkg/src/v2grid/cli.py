"""Command-line entry points.

``v2grid synth`` writes a reproducible synthetic location-records CSV (plus,
optionally, matching planning areas and a demand curve). ``v2grid run``
executes the full pipeline: ingest records, simulate every user-day,
aggregate per planning area, and compare against the household baseline.

Exit codes: 0 success, 2 usage or config error, 3 internal invariant
violation. Two runs with identical inputs and flags produce byte-identical
output files regardless of ``--jobs``; the manifest records sha256 digests of
every input and output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .aggregate import (
    UNASSIGNED,
    AggregateBuilder,
    ScalingConfig,
    attach_sizing,
    write_area_energy_csv,
    write_area_peak_csv,
    write_area_profile_csv,
    write_metrics_geojson,
)
from .baseline import (
    coverage_and_stats,
    household_baselines,
    night_fraction,
    read_demand_csv,
    write_coverage_csv,
    write_coverage_hist_csv,
    write_regression_txt,
)
from .engine import (
    PvWindow,
    VehicleParams,
    day_range_of,
    run_scenario,
    write_events_csv,
)
from .errors import DegenerateRegressorError, InvariantViolationError, V2GridError
from .geo import GridSpec, build_area_index, load_planning_areas
from .ingest import (
    IngestConfig,
    ingest_trajectories,
    read_records_csv,
    write_records_csv,
    write_stays_csv,
)
from .synth import (
    SynthConfig,
    generate,
    synthetic_planning_areas,
    write_demand_curve_csv,
)
from .geo import write_planning_areas_geojson

_CHUNK_USERS = 128  # fixed sharding so results never depend on --jobs


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2grid",
        description="Vehicle-to-grid supply and demand estimation from mobility traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic records CSV")
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.add_argument("--users", type=int, default=100)
    p_synth.add_argument("--days", type=int, default=7)
    p_synth.add_argument("--start-date", type=date.fromisoformat, default=date(2020, 9, 1))
    p_synth.add_argument("--origin-lat", type=float, default=1.22)
    p_synth.add_argument("--origin-lon", type=float, default=103.60)
    p_synth.add_argument("--rows", type=int, default=120)
    p_synth.add_argument("--cols", type=int, default=200)
    p_synth.add_argument("--cell-size", type=float, default=250.0, help="meters")
    p_synth.add_argument("--ping-interval", type=float, default=15.0, help="minutes")
    p_synth.add_argument("--mean-stays", type=float, default=2.0,
                         help="mean away-from-home stays per day")
    p_synth.add_argument("--tz", type=float, default=8.0, help="UTC offset hours")
    p_synth.add_argument("--out", default="records.csv")
    p_synth.add_argument("--areas-out", default=None,
                         help="also write matching planning areas GeoJSON")
    p_synth.add_argument("--demand-out", default=None,
                         help="also write a demo demand-curve CSV")

    p_run = sub.add_parser("run", help="run the full pipeline")
    p_run.add_argument("records", help="location records CSV")
    p_run.add_argument("areas", help="planning areas GeoJSON")
    p_run.add_argument("demand", help="system demand curve CSV")
    p_run.add_argument("--delta", type=float, default=0.03, help="EV penetration rate")
    p_run.add_argument("--n-pop", type=float, default=5.5e6, help="city population")
    p_run.add_argument("--c-max", type=float, default=25.0, help="battery capacity kWh")
    p_run.add_argument("--l-max", type=float, default=135.0, help="vehicle range km")
    p_run.add_argument("--p-charge", type=float, default=6.6, help="charge power kW")
    p_run.add_argument("--p-discharge", type=float, default=6.6, help="discharge power kW")
    p_run.add_argument("--c-thr", type=float, default=0.5, help="SOC threshold")
    p_run.add_argument("--c-init", type=float, default=0.5, help="SOC at each midnight")
    p_run.add_argument("--pv-start", default="09:00", help="solar window start HH:MM")
    p_run.add_argument("--pv-end", default="17:00", help="solar window end HH:MM")
    p_run.add_argument("--pv-charge-target", type=float, default=1.0)
    p_run.add_argument("--tau", type=float, default=1.0, help="minimum stay time, hours")
    p_run.add_argument("--min-days", type=int, default=5,
                       help="required consecutive active days")
    p_run.add_argument("--cell-size", type=float, default=250.0, help="meters")
    p_run.add_argument("--time-step", type=float, default=15.0,
                       help="demand profile step, minutes")
    p_run.add_argument("--tz", type=float, default=8.0, help="UTC offset hours")
    p_run.add_argument("--days-in-month", type=int, default=30,
                       help="divisor for monthly household consumption")
    p_run.add_argument("--jobs", type=int, default=1, help="worker processes")
    p_run.add_argument("--events-csv", action="store_true",
                       help="also dump every charge event")
    p_run.add_argument("--stays-csv", action="store_true",
                       help="also dump the extracted stays of retained users")
    p_run.add_argument("--out-dir", default="out")
    return parser


def cmd_synth(args: argparse.Namespace) -> int:
    grid = GridSpec(args.origin_lat, args.origin_lon, args.cell_size, args.rows, args.cols)
    cfg = SynthConfig.demo(
        grid,
        rng_seed=args.seed,
        n_users=args.users,
        n_days=args.days,
        start_date=args.start_date,
        utc_offset_hours=args.tz,
        ping_interval_minutes=args.ping_interval,
        mean_stays_per_day=args.mean_stays,
    )
    write_records_csv(generate(cfg, grid), args.out)
    if args.areas_out:
        write_planning_areas_geojson(
            synthetic_planning_areas(grid, rng_seed=args.seed), args.areas_out
        )
    if args.demand_out:
        write_demand_curve_csv(args.demand_out)
    return 0


def _grid_from_areas(areas, cell_size_m: float) -> GridSpec:
    """Smallest grid whose bounding box covers every area polygon."""
    lat_min = lon_min = math.inf
    lat_max = lon_max = -math.inf
    for area in areas:
        for part in area.polygon:
            for ring in part:
                lat_min = min(lat_min, float(ring[:, 0].min()))
                lat_max = max(lat_max, float(ring[:, 0].max()))
                lon_min = min(lon_min, float(ring[:, 1].min()))
                lon_max = max(lon_max, float(ring[:, 1].max()))
    if not math.isfinite(lat_min):
        raise V2GridError("no polygon vertices found in planning areas")
    probe = GridSpec(lat_min, lon_min, cell_size_m, 1, 1)
    x_max, y_max = probe.project(lat_max, lon_max)
    n_cols = max(1, int(math.ceil(x_max / cell_size_m - 1e-9)))
    n_rows = max(1, int(math.ceil(y_max / cell_size_m - 1e-9)))
    return GridSpec(lat_min, lon_min, cell_size_m, n_rows, n_cols)


def _simulate_chunk(payload) -> tuple[list, int, int]:
    """Worker task: simulate a chunk of users; returns (events, range_exceeded,
    n_traces). Events keep user order, so parent-side aggregation order is
    independent of the worker count."""
    chunk, params, window, grid, tz, days = payload
    events = []
    range_exceeded = 0
    n_traces = 0
    for trace in run_scenario(dict(chunk), params, window, grid, tz, days):
        events.extend(trace.events)
        range_exceeded += trace.range_exceeded
        n_traces += 1
    return events, range_exceeded, n_traces


def cmd_run(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)

    for path in (args.records, args.areas, args.demand):
        if not Path(path).is_file():
            print(f"error: input file not found: {path}", file=sys.stderr)
            return 2

    areas = load_planning_areas(args.areas)
    if not areas:
        print("error: planning areas file contains no features", file=sys.stderr)
        return 2
    demand_curve = read_demand_csv(args.demand)
    grid = _grid_from_areas(areas, args.cell_size)
    index = build_area_index(grid, areas)
    areas_by_id = {a.area_id: a for a in areas}

    params = VehicleParams(
        capacity_kwh=args.c_max,
        range_km=args.l_max,
        charge_power_kw=args.p_charge,
        discharge_power_kw=args.p_discharge,
        soc_threshold=args.c_thr,
        soc_initial=args.c_init,
        pv_charge_target=args.pv_charge_target,
    )
    window = PvWindow.from_times(args.pv_start, args.pv_end)
    ingest_cfg = IngestConfig(
        tau=timedelta(hours=args.tau),
        min_consecutive_days=args.min_days,
        grid=grid,
        utc_offset_hours=args.tz,
    )

    records_by_user, rows_skipped = read_records_csv(args.records)
    n_rows = sum(len(v) for v in records_by_user.values())
    trajectories, stats = ingest_trajectories(records_by_user, ingest_cfg)
    stats.rows_skipped += rows_skipped
    del records_by_user
    if args.stays_csv:
        write_stays_csv(
            (s for uid in sorted(trajectories) for s in trajectories[uid].stays),
            out_dir / "stays.csv",
        )

    days = day_range_of(trajectories.values(), args.tz)
    users = sorted(trajectories)
    scaling = ScalingConfig(
        ev_penetration=args.delta,
        observed_users=max(1, len(users)),
        population=int(args.n_pop),
        time_step_minutes=args.time_step,
    )

    builder = AggregateBuilder(index, scaling)
    all_events: Optional[list] = [] if args.events_csv else None
    range_exceeded = 0
    n_traces = 0
    n_events = 0
    chunks = [
        [(u, trajectories[u]) for u in users[i : i + _CHUNK_USERS]]
        for i in range(0, len(users), _CHUNK_USERS)
    ]
    payloads = ((c, params, window, grid, args.tz, days) for c in chunks)
    if args.jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = pool.map(_simulate_chunk, payloads)
            for events, rexc, traces in results:
                builder.add_events(events)
                n_events += len(events)
                if all_events is not None:
                    all_events.extend(events)
                range_exceeded += rexc
                n_traces += traces
    else:
        for payload in payloads:
            events, rexc, traces = _simulate_chunk(payload)
            builder.add_events(events)
            n_events += len(events)
            if all_events is not None:
                all_events.extend(events)
            range_exceeded += rexc
            n_traces += traces

    aggregates = builder.aggregates()
    attach_sizing(aggregates, areas_by_id, params.charge_power_kw)

    # household comparison: mean daily V2G supply per area vs night baseline
    night_frac = night_fraction(demand_curve, window)
    baselines, skipped_areas = household_baselines(
        areas, args.days_in_month, night_frac
    )
    e_ev_mean: dict[str, float] = {a.area_id: 0.0 for a in areas}
    for (area_id, _day), agg in aggregates.items():
        if area_id != UNASSIGNED:
            e_ev_mean[area_id] = e_ev_mean.get(area_id, 0.0) + agg.e_ev_kwh
    if days:
        e_ev_mean = {a: v / len(days) for a, v in e_ev_mean.items()}
    e_hh = {a: b.e_hh_night_kwh for a, b in baselines.items()}
    stats_note = ""
    try:
        coverage = coverage_and_stats(e_ev_mean, e_hh)
    except DegenerateRegressorError as exc:
        stats_note = f"withheld: {exc}"
        coverage = None

    write_area_energy_csv(aggregates, out_dir / "area_energy.csv")
    write_area_peak_csv(aggregates, out_dir / "area_peak.csv")
    write_area_profile_csv(aggregates, args.time_step, out_dir / "area_profile.csv")
    if coverage is not None:
        write_coverage_csv(e_ev_mean, e_hh, coverage.ratios, out_dir / "coverage.csv")
        write_coverage_hist_csv(coverage.histogram, out_dir / "coverage_hist.csv")
        write_regression_txt(coverage, out_dir / "regression.txt")
        ratios = coverage.ratios
    else:
        write_coverage_csv(e_ev_mean, e_hh, {}, out_dir / "coverage.csv")
        write_coverage_hist_csv([], out_dir / "coverage_hist.csv")
        with open(out_dir / "regression.txt", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"statistics {stats_note}\n")
            fh.write(f"n = {len(set(e_ev_mean) & set(e_hh))}\n")
        ratios = {}
    write_metrics_geojson(areas, aggregates, ratios, out_dir / "metrics.geojson")
    if all_events is not None:
        write_events_csv(all_events, out_dir / "events.csv")

    output_names = [
        "area_energy.csv", "area_peak.csv", "area_profile.csv",
        "coverage.csv", "coverage_hist.csv", "regression.txt", "metrics.geojson",
    ]
    if all_events is not None:
        output_names.append("events.csv")
    if args.stays_csv:
        output_names.append("stays.csv")

    finished = datetime.now(timezone.utc)
    manifest = {
        "tool": {"name": "v2grid", "version": __version__},
        "started_utc": started.isoformat(),
        "finished_utc": finished.isoformat(),
        "timezone": f"UTC{'+' if args.tz >= 0 else '-'}{abs(args.tz):05.2f}h",
        "parameters": {
            "delta": args.delta,
            "n_pop": int(args.n_pop),
            "n_usr": len(users),
            "market_share": scaling.market_share if users else None,
            "c_max_kwh": params.capacity_kwh,
            "l_max_km": params.range_km,
            "p_charge_kw": params.charge_power_kw,
            "p_discharge_kw": params.discharge_power_kw,
            "c_thr": params.soc_threshold,
            "c_init": params.soc_initial,
            "pv_charge_target": params.pv_charge_target,
            "pv_start": args.pv_start,
            "pv_end": args.pv_end,
            "tau_hours": args.tau,
            "min_consecutive_days": args.min_days,
            "cell_size_m": args.cell_size,
            "time_step_minutes": args.time_step,
            "tz_offset_hours": args.tz,
            "days_in_month": args.days_in_month,
            "jobs": args.jobs,
            "grid": {
                "origin_lat": grid.origin_lat,
                "origin_lon": grid.origin_lon,
                "n_rows": grid.n_rows,
                "n_cols": grid.n_cols,
            },
        },
        "inputs": {
            name: _sha256(Path(path))
            for name, path in (
                ("records", args.records),
                ("areas", args.areas),
                ("demand", args.demand),
            )
        },
        "outputs": {name: _sha256(out_dir / name) for name in output_names},
        "counts": {
            "rows_read": n_rows + stats.rows_skipped,
            "rows_skipped": stats.rows_skipped,
            "users_total": stats.users_total,
            "users_retained": stats.users_retained,
            "stays": stats.stays_emitted,
            "simulated_days": len(days),
            "traces": n_traces,
            "events": n_events,
        },
        "warnings": {
            "rows_skipped": stats.rows_skipped,
            "records_out_of_grid": stats.records_out_of_grid,
            "grid_cells_unassigned": index.n_unassigned,
            "events_in_unassigned_cells": builder.events_unassigned,
            "range_exceeded_trips": range_exceeded,
            "areas_missing_household_data": skipped_areas,
            "empty_records_input": n_rows == 0,
            "regression_note": stats_note or (coverage.stats_note if coverage else ""),
        },
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_run(args)
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except (V2GridError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
