"""Household night-time consumption baseline and the coverage comparison.

The night share of daily household energy is read off a city-wide system
demand curve: everything outside the solar window counts as night. Per-area
night-time household energy then anchors the coverage ratio (V2G supply over
household night consumption) and its correlation/regression statistics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats as sstats

from .errors import (
    DegenerateRegressorError,
    InvalidInputError,
    MissingHouseholdDataError,
    UndefinedFractionError,
)
from .engine import PvWindow
from .geo import PlanningArea


@dataclass(frozen=True)
class DemandCurve:
    """Uniformly sampled system demand over 24 hours (arbitrary units)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise InvalidInputError("demand curve needs at least 2 samples")
        if any(not math.isfinite(v) or v < 0 for v in self.values):
            raise InvalidInputError("demand samples must be finite and >= 0")

    @property
    def sample_hours(self) -> float:
        return 24.0 / len(self.values)


def read_demand_csv(path) -> DemandCurve:
    """CSV with header time_of_day,demand; times HH:MM from 00:00, uniform."""
    rows: list[tuple[int, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time_of_day", "demand"]:
            raise InvalidInputError("demand CSV must have header time_of_day,demand")
        for row in reader:
            if len(row) != 2:
                raise InvalidInputError(f"bad demand row: {row!r}")
            try:
                hh, mm = row[0].split(":")
                minutes = int(hh) * 60 + int(mm)
                value = float(row[1])
            except ValueError as exc:
                raise InvalidInputError(f"bad demand row: {row!r}") from exc
            rows.append((minutes, value))
    if len(rows) < 2:
        raise InvalidInputError("demand curve needs at least 2 samples")
    step = rows[1][0] - rows[0][0]
    if rows[0][0] != 0 or step <= 0 or 1440 % step != 0 or len(rows) != 1440 // step:
        raise InvalidInputError("demand samples must uniformly cover 24 h from 00:00")
    for i, (minutes, _) in enumerate(rows):
        if minutes != i * step:
            raise InvalidInputError("demand samples must be uniformly spaced")
    return DemandCurve(tuple(v for _, v in rows))


def night_fraction(curve: DemandCurve, window: PvWindow) -> float:
    """Share of daily demand falling outside the solar window.

    Samples straddling a window boundary contribute pro-rata by overlap.
    """
    dt = curve.sample_hours
    total = 0.0
    night = 0.0

    def overlap(a: float, b: float, lo: float, hi: float) -> float:
        return max(0.0, min(b, hi) - max(a, lo))

    for i, v in enumerate(curve.values):
        s = i * dt
        e = s + dt
        total += v
        night_h = overlap(s, e, 0.0, window.start_hour) + overlap(s, e, window.end_hour, 24.0)
        if night_h >= dt:
            night += v
        elif night_h > 0.0:
            night += v * (night_h / dt)
    if total <= 0.0:
        raise UndefinedFractionError("demand curve sums to zero")
    return night / total


@dataclass(frozen=True)
class HouseholdBaseline:
    area_id: str
    e_hh_day_kwh: float
    night_fraction: float
    e_hh_night_kwh: float


def household_night_energy(
    area: PlanningArea, days_in_month: int, night_frac: float
) -> float:
    """Daily night-time household energy of one area, in kWh."""
    if days_in_month < 1:
        raise InvalidInputError("days_in_month must be >= 1")
    if not 0.0 <= night_frac <= 1.0:
        raise InvalidInputError("night fraction must lie in [0, 1]")
    if not area.has_household_data:
        raise MissingHouseholdDataError(
            f"area {area.area_id} lacks households/monthly_kwh_per_household"
        )
    daily = area.monthly_kwh_per_household * area.households / days_in_month
    return daily * night_frac


def household_baselines(
    areas: Sequence[PlanningArea], days_in_month: int, night_frac: float
) -> tuple[dict[str, HouseholdBaseline], int]:
    """Baselines for every area with household data; returns (table, skipped)."""
    out: dict[str, HouseholdBaseline] = {}
    skipped = 0
    for area in sorted(areas, key=lambda a: a.area_id):
        try:
            e_night = household_night_energy(area, days_in_month, night_frac)
        except MissingHouseholdDataError:
            skipped += 1
            continue
        daily = area.monthly_kwh_per_household * area.households / days_in_month
        out[area.area_id] = HouseholdBaseline(
            area_id=area.area_id,
            e_hh_day_kwh=daily,
            night_fraction=night_frac,
            e_hh_night_kwh=e_night,
        )
    return out, skipped


@dataclass(frozen=True)
class RegressionSummary:
    pearson_r: float
    p_value: float
    ols_slope: float
    ols_intercept: float
    r_squared: float
    n_points: int


@dataclass(frozen=True)
class CoverageResult:
    ratios: dict[str, float]  # per area, V2G energy over household night energy
    histogram: list[tuple[float, float, int]]  # (bin_low, bin_high, count)
    stats: Optional[RegressionSummary]
    stats_note: str
    n_paired: int
    n_excluded: int


def coverage_and_stats(
    e_ev_by_area: Mapping[str, float],
    e_hh_by_area: Mapping[str, float],
    bin_width: float = 0.05,
) -> CoverageResult:
    """Coverage ratios over paired areas plus the regression of supply on
    household consumption.

    Areas present in only one table, or with non-positive household energy,
    are excluded pairwise. With fewer than 3 pairs the statistics are
    withheld (ratios are still computed). A household series with zero
    variance cannot anchor a regression and raises DegenerateRegressorError.
    """
    if bin_width <= 0:
        raise InvalidInputError("bin_width must be positive")
    paired = sorted(
        a for a in e_ev_by_area.keys() & e_hh_by_area.keys() if e_hh_by_area[a] > 0
    )
    n_excluded = len(set(e_ev_by_area) | set(e_hh_by_area)) - len(paired)
    ratios = {a: e_ev_by_area[a] / e_hh_by_area[a] for a in paired}

    hist: list[tuple[float, float, int]] = []
    if ratios:
        vals = np.array([ratios[a] for a in paired])
        n_bins = max(1, int(math.ceil(float(vals.max()) / bin_width - 1e-12)))
        edges = np.arange(n_bins + 1) * bin_width
        counts, _ = np.histogram(vals, bins=edges)
        hist = [
            (float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(n_bins)
        ]

    if len(paired) < 3:
        return CoverageResult(
            ratios, hist, None, "withheld: fewer than 3 paired areas",
            len(paired), n_excluded,
        )
    x = np.array([e_hh_by_area[a] for a in paired])
    y = np.array([e_ev_by_area[a] for a in paired])
    if float(np.var(x)) == 0.0:
        raise DegenerateRegressorError("household energy has zero variance")
    if float(np.var(y)) == 0.0:
        return CoverageResult(
            ratios, hist, None, "withheld: V2G energy has zero variance",
            len(paired), n_excluded,
        )
    r, p = sstats.pearsonr(x, y)
    slope = float(np.cov(x, y, ddof=0)[0, 1] / np.var(x))
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    summary = RegressionSummary(
        pearson_r=float(r),
        p_value=float(p),
        ols_slope=slope,
        ols_intercept=intercept,
        r_squared=1.0 - ss_res / ss_tot,
        n_points=len(paired),
    )
    return CoverageResult(ratios, hist, summary, "", len(paired), n_excluded)


# ---------------------------------------------------------------------------
# Output tables
# ---------------------------------------------------------------------------

def write_coverage_csv(
    e_ev_by_area: Mapping[str, float],
    e_hh_by_area: Mapping[str, float],
    ratios: Mapping[str, float],
    path,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["area_id", "e_ev_kwh", "e_hh_kwh", "ratio"])
        for area_id in sorted(set(e_ev_by_area) & set(e_hh_by_area)):
            writer.writerow(
                [
                    area_id,
                    repr(e_ev_by_area[area_id]),
                    repr(e_hh_by_area[area_id]),
                    repr(ratios[area_id]) if area_id in ratios else "",
                ]
            )


def write_coverage_hist_csv(histogram: Sequence[tuple[float, float, int]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_low", "bin_high", "count"])
        for low, high, count in histogram:
            writer.writerow([repr(low), repr(high), count])


def write_regression_txt(result: CoverageResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if result.stats is None:
            fh.write(f"statistics {result.stats_note or 'withheld'}\n")
            fh.write(f"n = {result.n_paired}\n")
            return
        s = result.stats
        fh.write(f"r = {s.pearson_r!r}\n")
        fh.write(f"p_value = {s.p_value!r}\n")
        fh.write(f"slope = {s.ols_slope!r}\n")
        fh.write(f"intercept = {s.ols_intercept!r}\n")
        fh.write(f"r_squared = {s.r_squared!r}\n")
        fh.write(f"n = {s.n_points}\n")
