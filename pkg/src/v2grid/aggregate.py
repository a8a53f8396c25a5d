"""Per-planning-area aggregation of charge events.

Per-user contributions are summed per area and day, then rescaled by
delta / s, where delta is the assumed EV penetration rate and s the share of
the population observed in the mobility data. Energy supply counts discharge
events only; the peak-demand profile counts both charging regimes,
time-averaged within fixed steps of the day.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .engine import ChargeEvent, Regime
from .geo import AreaIndex, PlanningArea, planning_area_feature

UNASSIGNED = "_unassigned"  # reserved id for events in cells outside all areas

AreaDay = tuple[str, date]


@dataclass(frozen=True)
class ScalingConfig:
    """Population scaling and the time discretisation of the demand profile."""

    ev_penetration: float  # delta in (0, 1]
    observed_users: int  # retained users in the mobility sample
    population: int
    time_step_minutes: float = 15.0

    def __post_init__(self) -> None:
        if not 0.0 < self.ev_penetration <= 1.0:
            raise InvalidConfigError("ev_penetration must lie in (0, 1]")
        if self.observed_users <= 0:
            raise InvalidConfigError("observed_users must be positive")
        if self.population <= 0:
            raise InvalidConfigError("population must be positive")
        if self.observed_users > self.population:
            raise InvalidConfigError("observed_users cannot exceed population")
        if not self.time_step_minutes > 0:
            raise InvalidConfigError("time_step_minutes must be positive")
        steps = 24.0 * 60.0 / self.time_step_minutes
        if abs(steps - round(steps)) > 1e-9:
            raise InvalidConfigError("time_step_minutes must divide 24 h")

    @property
    def market_share(self) -> float:
        return self.observed_users / self.population

    @property
    def scale(self) -> float:
        """Multiplier applied to every sampled quantity: delta / s."""
        return self.ev_penetration / self.market_share

    @property
    def steps_per_day(self) -> int:
        return int(round(24.0 * 60.0 / self.time_step_minutes))


@dataclass
class AreaAggregate:
    """Scaled per-area, per-day totals."""

    area_id: str
    day: date
    e_ev_kwh: float
    e_pv_charge_kwh: float
    e_nonpv_charge_kwh: float
    demand_profile: np.ndarray  # kW per time step, scaled
    p_ev_peak_kw: float
    peak_step: int
    p_peak_density_w_per_m2: Optional[float] = None
    charging_points_abs: Optional[int] = None
    charging_points_per_km2: Optional[float] = None


class _Accumulator:
    __slots__ = ("discharge", "pv", "nonpv", "profile")

    def __init__(self, steps: int):
        self.discharge = 0.0
        self.pv = 0.0
        self.nonpv = 0.0
        self.profile = np.zeros(steps)


class AggregateBuilder:
    """Streaming reduction of charge events into per-(area, day) sums.

    The reduction is commutative and associative up to float rounding; for
    bit-stable results feed events in a fixed order and merge partial
    builders in a fixed order.
    """

    def __init__(self, index: AreaIndex, scaling: ScalingConfig):
        self.index = index
        self.scaling = scaling
        self._acc: dict[AreaDay, _Accumulator] = {}
        self.events_unassigned = 0
        self._step_h = 24.0 / scaling.steps_per_day

    def _slot(self, key: AreaDay) -> _Accumulator:
        acc = self._acc.get(key)
        if acc is None:
            acc = self._acc[key] = _Accumulator(self.scaling.steps_per_day)
        return acc

    def add_event(self, event: ChargeEvent) -> None:
        area = self.index.area_of(event.cell)
        if area is None:
            area = UNASSIGNED
            self.events_unassigned += 1
        acc = self._slot((area, event.day))
        if event.regime is Regime.DISCHARGE:
            acc.discharge += event.energy_kwh
            return
        if event.regime is Regime.PV_CHARGE:
            acc.pv += event.energy_kwh
        else:
            acc.nonpv += event.energy_kwh
        # time-averaged power contribution of the event to each step it overlaps
        dt = self._step_h
        i0 = int(math.floor(event.start_hour / dt))
        i1 = min(int(math.ceil(event.end_hour / dt)), self.scaling.steps_per_day)
        for i in range(i0, i1):
            overlap = min(event.end_hour, (i + 1) * dt) - max(event.start_hour, i * dt)
            if overlap > 0:
                acc.profile[i] += event.power_kw * overlap / dt

    def add_events(self, events: Iterable[ChargeEvent]) -> None:
        for ev in events:
            self.add_event(ev)

    def merge(self, other: "AggregateBuilder") -> None:
        if other.scaling != self.scaling:
            raise InvalidConfigError("cannot merge builders with different scaling")
        for key, acc in other._acc.items():
            mine = self._slot(key)
            mine.discharge += acc.discharge
            mine.pv += acc.pv
            mine.nonpv += acc.nonpv
            mine.profile += acc.profile
        self.events_unassigned += other.events_unassigned

    def aggregates(self) -> dict[AreaDay, AreaAggregate]:
        scale = self.scaling.scale
        out: dict[AreaDay, AreaAggregate] = {}
        for key in sorted(self._acc, key=lambda k: (k[0], k[1])):
            acc = self._acc[key]
            profile = acc.profile * scale
            peak_step = int(np.argmax(profile)) if profile.size else 0
            out[key] = AreaAggregate(
                area_id=key[0],
                day=key[1],
                e_ev_kwh=acc.discharge * scale,
                e_pv_charge_kwh=acc.pv * scale,
                e_nonpv_charge_kwh=acc.nonpv * scale,
                demand_profile=profile,
                p_ev_peak_kw=float(profile[peak_step]) if profile.size else 0.0,
                peak_step=peak_step,
            )
        return out


def area_energy_supply(
    events: Iterable[ChargeEvent], index: AreaIndex, scaling: ScalingConfig
) -> dict[AreaDay, float]:
    """Scaled discharge energy per area and day (events in unmapped cells are
    kept under the reserved '_unassigned' area)."""
    builder = AggregateBuilder(index, scaling)
    builder.add_events(events)
    return {k: agg.e_ev_kwh for k, agg in builder.aggregates().items()}


class DemandProfile(NamedTuple):
    profile_kw: np.ndarray
    peak_kw: float
    peak_step: int


def area_peak_demand(
    events: Iterable[ChargeEvent], index: AreaIndex, scaling: ScalingConfig
) -> dict[AreaDay, DemandProfile]:
    """Scaled per-step charging power and its daily peak per area and day.

    Peak ties resolve to the earliest step.
    """
    builder = AggregateBuilder(index, scaling)
    builder.add_events(events)
    return {
        k: DemandProfile(agg.demand_profile, agg.p_ev_peak_kw, agg.peak_step)
        for k, agg in builder.aggregates().items()
    }


class Sizing(NamedTuple):
    density_w_per_m2: float
    points_abs: int
    points_per_km2: float


def peak_density_and_sizing(
    peak_kw: float, area_m2: float, charge_power_kw: float
) -> Sizing:
    """Peak demand density and the charging-point count it implies."""
    if not area_m2 > 0:
        raise InvalidInputError("area_m2 must be positive")
    if not charge_power_kw > 0:
        raise InvalidInputError("charge_power_kw must be positive")
    if peak_kw < 0:
        raise InvalidInputError("peak_kw must be non-negative")
    density = peak_kw * 1000.0 / area_m2
    points_abs = int(math.ceil(peak_kw / charge_power_kw - 1e-12)) if peak_kw > 0 else 0
    points_per_km2 = peak_kw / (area_m2 * charge_power_kw) * 1e6
    return Sizing(density, points_abs, points_per_km2)


class PvSupport(NamedTuple):
    p_pv_w_per_m2: float
    deficit_by_area: dict[str, bool]


def pv_sufficiency(
    pv_efficiency: float,
    panel_area_fraction: float,
    irradiance_w_per_m2: float,
    peak_density_by_area: Optional[Mapping[str, float]] = None,
) -> PvSupport:
    """Local PV generation potential per unit land area, and which areas'
    peak demand density exceeds it."""
    for name, v in (
        ("pv_efficiency", pv_efficiency),
        ("panel_area_fraction", panel_area_fraction),
        ("irradiance_w_per_m2", irradiance_w_per_m2),
    ):
        if not (math.isfinite(v) and v >= 0):
            raise InvalidInputError(f"{name} must be finite and non-negative")
    p_pv = pv_efficiency * panel_area_fraction * irradiance_w_per_m2
    deficits = {}
    if peak_density_by_area:
        deficits = {a: d > p_pv for a, d in sorted(peak_density_by_area.items())}
    return PvSupport(p_pv, deficits)


def attach_sizing(
    aggregates: dict[AreaDay, AreaAggregate],
    areas_by_id: Mapping[str, PlanningArea],
    charge_power_kw: float,
) -> None:
    """Fill density and charging-point fields for areas with known geometry."""
    for (area_id, _day), agg in aggregates.items():
        area = areas_by_id.get(area_id)
        if area is None:
            continue
        sizing = peak_density_and_sizing(agg.p_ev_peak_kw, area.area_m2, charge_power_kw)
        agg.p_peak_density_w_per_m2 = sizing.density_w_per_m2
        agg.charging_points_abs = sizing.points_abs
        agg.charging_points_per_km2 = sizing.points_per_km2


# ---------------------------------------------------------------------------
# Output tables
# ---------------------------------------------------------------------------

def _step_label(step: int, step_minutes: float) -> str:
    minutes = int(round(step * step_minutes))
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def write_area_energy_csv(aggregates: Mapping[AreaDay, AreaAggregate], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["area_id", "day", "e_ev_kwh", "e_pv_charge_kwh", "e_nonpv_charge_kwh"])
        for (area_id, day) in sorted(aggregates):
            agg = aggregates[(area_id, day)]
            writer.writerow(
                [area_id, day.isoformat(), repr(agg.e_ev_kwh),
                 repr(agg.e_pv_charge_kwh), repr(agg.e_nonpv_charge_kwh)]
            )


def write_area_peak_csv(aggregates: Mapping[AreaDay, AreaAggregate], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["area_id", "day", "p_peak_kw", "p_density_w_m2",
             "charging_points_abs", "charging_points_per_km2"]
        )
        for (area_id, day) in sorted(aggregates):
            agg = aggregates[(area_id, day)]
            writer.writerow(
                [
                    area_id,
                    day.isoformat(),
                    repr(agg.p_ev_peak_kw),
                    "" if agg.p_peak_density_w_per_m2 is None else repr(agg.p_peak_density_w_per_m2),
                    "" if agg.charging_points_abs is None else agg.charging_points_abs,
                    "" if agg.charging_points_per_km2 is None else repr(agg.charging_points_per_km2),
                ]
            )


def write_area_profile_csv(
    aggregates: Mapping[AreaDay, AreaAggregate], step_minutes: float, path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["area_id", "day", "step_start", "power_kw"])
        for (area_id, day) in sorted(aggregates):
            agg = aggregates[(area_id, day)]
            for step, power in enumerate(agg.demand_profile):
                writer.writerow(
                    [area_id, day.isoformat(), _step_label(step, step_minutes), repr(float(power))]
                )


def write_metrics_geojson(
    areas: Iterable[PlanningArea],
    aggregates: Mapping[AreaDay, AreaAggregate],
    coverage_ratios: Mapping[str, float],
    path,
) -> None:
    """Echo the planning-area geometry with per-area summary metrics.

    Per-day values are summarised as the mean daily energy supply and the
    maximum daily peak across the simulated days.
    """
    by_area: dict[str, list[AreaAggregate]] = {}
    for (area_id, _day), agg in aggregates.items():
        by_area.setdefault(area_id, []).append(agg)
    n_days = max((len(v) for v in by_area.values()), default=0)
    features = []
    for area in sorted(areas, key=lambda a: a.area_id):
        aggs = by_area.get(area.area_id, [])
        e_mean = sum(a.e_ev_kwh for a in aggs) / n_days if n_days else 0.0
        peak = max((a.p_ev_peak_kw for a in aggs), default=0.0)
        props = {
            "e_ev_kwh_mean_daily": e_mean,
            "p_peak_kw_max": peak,
            "p_density_w_m2": peak * 1000.0 / area.area_m2,
        }
        if area.area_id in coverage_ratios:
            props["coverage_ratio"] = coverage_ratios[area.area_id]
        features.append(planning_area_feature(area, props))
    doc = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
