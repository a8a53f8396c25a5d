"""Per-vehicle battery simulation.

Each user-day is simulated midnight-to-midnight in the configured local
clock, starting from a fixed state of charge. During a stay the vehicle
follows one of four rules, re-evaluated at the solar-window boundaries:

* inside the solar window: charge at full power until the PV charge target
  (default: full battery), then idle;
* outside the window with SOC above the threshold: discharge at full power
  down to the threshold, then idle;
* outside the window with SOC below the threshold: charge at full power up
  to the threshold, then idle;
* outside the window at exactly the threshold: idle.

Between consecutive stays of the same day the SOC drops instantaneously at
arrival by (centroid distance) / (vehicle range), clamped at zero. The
simulation is event-based: regime changes are computed in closed form, so
traces are exact piecewise-linear curves rather than fixed-step samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from .errors import InvalidInputError, InvariantViolationError
from .geo import CellId, GridSpec, cell_distance_m
from .ingest import Trajectory

DAY_S = 86400
EPOCH_DATE = date(1970, 1, 1)


@dataclass(frozen=True)
class VehicleParams:
    """Battery and charger ratings plus the behavioural set points."""

    capacity_kwh: float = 25.0
    range_km: float = 135.0
    charge_power_kw: float = 6.6
    discharge_power_kw: float = 6.6
    soc_threshold: float = 0.5
    soc_initial: float = 0.5
    pv_charge_target: float = 1.0

    def __post_init__(self) -> None:
        for name in ("capacity_kwh", "range_km", "charge_power_kw", "discharge_power_kw"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("soc_threshold", "soc_initial", "pv_charge_target"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class PvWindow:
    """Daily interval [start_hour, end_hour) of sufficient solar irradiance."""

    start_hour: float = 9.0
    end_hour: float = 17.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.start_hour < self.end_hour <= 24.0):
            raise InvalidInputError("window must satisfy 0 <= start < end <= 24")

    @classmethod
    def from_times(cls, start: str, end: str) -> "PvWindow":
        def to_hours(text: str) -> float:
            t = time.fromisoformat(text)
            return t.hour + t.minute / 60.0 + t.second / 3600.0

        return cls(to_hours(start), to_hours(end))

    def contains(self, hour: float) -> bool:
        return self.start_hour <= hour < self.end_hour


class Regime(str, Enum):
    PV_CHARGE = "PV_CHARGE"
    NONPV_CHARGE = "NONPV_CHARGE"
    DISCHARGE = "DISCHARGE"


CHARGING_REGIMES = (Regime.PV_CHARGE, Regime.NONPV_CHARGE)


@dataclass(frozen=True, slots=True)
class ChargeEvent:
    """One constant-power energy transfer inside a stay.

    power_kw is always positive: grid-to-vehicle for the charging regimes,
    vehicle-to-grid for DISCHARGE. Hours count from local midnight of `day`.
    """

    user_id: str
    day: date
    cell: CellId
    regime: Regime
    start_hour: float
    end_hour: float
    power_kw: float
    energy_kwh: float

    @property
    def duration_h(self) -> float:
        return self.end_hour - self.start_hour


class DepletionJump(NamedTuple):
    hour: float
    soc_drop: float  # applied (possibly clamped) drop
    from_cell: CellId
    to_cell: CellId
    clamped: bool


class DayStay(NamedTuple):
    """A stay clipped to one local day, in hours since local midnight."""

    cell: CellId
    start_hour: float
    end_hour: float


@dataclass
class SocTrace:
    """Piecewise-linear state of charge of one user over one day."""

    user_id: str
    day: date
    breakpoints: list[tuple[float, float]]
    events: list[ChargeEvent]
    depletion_jumps: list[DepletionJump]
    soc_initial: float
    soc_final: float
    range_exceeded: int = 0

    def energy_kwh(self, regime: Regime) -> float:
        return sum(e.energy_kwh for e in self.events if e.regime is regime)

    @property
    def discharge_kwh(self) -> float:
        return self.energy_kwh(Regime.DISCHARGE)

    @property
    def charge_kwh(self) -> float:
        return self.energy_kwh(Regime.PV_CHARGE) + self.energy_kwh(Regime.NONPV_CHARGE)


def drive_depletion_kwh(distance_km: float, params: VehicleParams) -> float:
    """Battery energy spent driving a distance: capacity / range * distance."""
    if not math.isfinite(distance_km) or distance_km < 0:
        raise InvalidInputError("distance must be finite and non-negative")
    return params.capacity_kwh / params.range_km * distance_km


def _window_segments(
    start: float, end: float, window: PvWindow
) -> list[tuple[float, float, bool]]:
    cuts = [start]
    for b in (window.start_hour, window.end_hour):
        if start < b < end:
            cuts.append(b)
    cuts.append(end)
    return [(a, b, window.contains(a)) for a, b in zip(cuts, cuts[1:]) if b > a]


def simulate_day(
    user_id: str,
    day: date,
    stays: Sequence[DayStay],
    params: VehicleParams,
    window: PvWindow,
    grid: GridSpec,
    dist_cache: Optional[dict] = None,
) -> SocTrace:
    """Simulate one user-day; see the module docstring for the rule set."""
    prev_end = 0.0
    for st in stays:
        if not (0.0 <= st.start_hour < st.end_hour <= 24.0):
            raise InvalidInputError(f"stay {st} outside the day bounds")
        if st.start_hour < prev_end:
            raise InvalidInputError("stays must be ordered and non-overlapping")
        prev_end = st.end_hour

    soc = params.soc_initial
    breakpoints: list[tuple[float, float]] = [(0.0, soc)]
    events: list[ChargeEvent] = []
    jumps: list[DepletionJump] = []
    range_exceeded = 0
    cap = params.capacity_kwh

    def mark(t: float, s: float) -> None:
        if breakpoints[-1] != (t, s):
            breakpoints.append((t, s))

    prev_cell: Optional[CellId] = None
    for st in stays:
        if prev_cell is not None and st.cell != prev_cell:
            if dist_cache is not None and (prev_cell, st.cell) in dist_cache:
                dist_km = dist_cache[(prev_cell, st.cell)]
            else:
                dist_km = cell_distance_m(prev_cell, st.cell, grid) / 1000.0
                if dist_cache is not None:
                    dist_cache[(prev_cell, st.cell)] = dist_km
                    dist_cache[(st.cell, prev_cell)] = dist_km
            drop = dist_km / params.range_km
            if drop > 0.0:
                mark(st.start_hour, soc)
                clamped = drop > soc
                applied = soc if clamped else drop
                if clamped:
                    range_exceeded += 1
                soc = 0.0 if clamped else soc - applied
                jumps.append(DepletionJump(st.start_hour, applied, prev_cell, st.cell, clamped))
                mark(st.start_hour, soc)

        for seg_s, seg_e, inside in _window_segments(st.start_hour, st.end_hour, window):
            if inside:
                target, rate, regime, up = (
                    params.pv_charge_target, params.charge_power_kw, Regime.PV_CHARGE, True,
                )
                active = soc < target
            elif soc > params.soc_threshold:
                target, rate, regime, up = (
                    params.soc_threshold, params.discharge_power_kw, Regime.DISCHARGE, False,
                )
                active = True
            elif soc < params.soc_threshold:
                target, rate, regime, up = (
                    params.soc_threshold, params.charge_power_kw, Regime.NONPV_CHARGE, True,
                )
                active = True
            else:
                active = False
            if not active:
                continue
            gap = (target - soc) if up else (soc - target)
            if gap * cap < 1e-12:  # rounding dust, not a real transfer
                continue
            need_h = gap * cap / rate
            if need_h <= seg_e - seg_s:
                energy = gap * cap
                t1 = seg_s + need_h
                new_soc = target
            else:
                energy = rate * (seg_e - seg_s)
                t1 = seg_e
                delta = energy / cap
                new_soc = min(soc + delta, target) if up else max(soc - delta, target)
            if t1 > seg_s and energy > 0.0:
                mark(seg_s, soc)
                events.append(
                    ChargeEvent(user_id, day, st.cell, regime, seg_s, t1, rate, energy)
                )
                soc = new_soc
                mark(t1, soc)
        prev_cell = st.cell

    mark(24.0, soc)
    if not -1e-12 <= soc <= 1.0 + 1e-12:
        raise InvariantViolationError(
            f"SOC {soc} escaped [0, 1] for user {user_id} on {day}"
        )
    return SocTrace(
        user_id=user_id,
        day=day,
        breakpoints=breakpoints,
        events=events,
        depletion_jumps=jumps,
        soc_initial=params.soc_initial,
        soc_final=soc,
        range_exceeded=range_exceeded,
    )


def slice_trajectory_days(
    trajectory: Trajectory, utc_offset_hours: float
) -> dict[date, list[DayStay]]:
    """Clip a trajectory's stays to local days. Stays spanning midnight are
    split at the boundary; each part lands in its own day."""
    off = int(round(utc_offset_hours * 3600))
    by_day: dict[date, list[DayStay]] = {}
    for stay in trajectory.stays:
        arr = int(stay.arrival.timestamp()) + off
        dep = int(stay.departure.timestamp()) + off
        if dep <= arr:
            continue
        for k in range(arr // DAY_S, (dep - 1) // DAY_S + 1):
            s = max(arr - k * DAY_S, 0)
            e = min(dep - k * DAY_S, DAY_S)
            if e > s:
                by_day.setdefault(epoch_day_to_date(k), []).append(
                    DayStay(stay.cell, s / 3600.0, e / 3600.0)
                )
    return by_day


def epoch_day_to_date(day_index: int) -> date:
    return EPOCH_DATE + timedelta(days=day_index)


def day_range_of(trajectories: Iterable[Trajectory], utc_offset_hours: float) -> list[date]:
    """All local days between the first and last observed stay, inclusive."""
    off = int(round(utc_offset_hours * 3600))
    lo: Optional[int] = None
    hi: Optional[int] = None
    for traj in trajectories:
        for stay in traj.stays:
            arr = int(stay.arrival.timestamp()) + off
            dep = int(stay.departure.timestamp()) + off
            d0, d1 = arr // DAY_S, max(arr // DAY_S, (dep - 1) // DAY_S)
            lo = d0 if lo is None else min(lo, d0)
            hi = d1 if hi is None else max(hi, d1)
    if lo is None or hi is None:
        return []
    return [epoch_day_to_date(k) for k in range(lo, hi + 1)]


def run_scenario(
    trajectories: Mapping[str, Trajectory],
    params: VehicleParams,
    window: PvWindow,
    grid: GridSpec,
    utc_offset_hours: float = 8.0,
    days: Optional[Sequence[date]] = None,
) -> Iterator[SocTrace]:
    """One SocTrace per user per day, streamed in (user, day) order.

    The SOC resets to its initial value at every local midnight, so each
    user-day is independent and the iteration order never affects results.
    """
    if days is None:
        days = day_range_of(trajectories.values(), utc_offset_hours)
    dist_cache: dict = {}
    for uid in sorted(trajectories):
        by_day = slice_trajectory_days(trajectories[uid], utc_offset_hours)
        for day in days:
            yield simulate_day(
                uid, day, by_day.get(day, ()), params, window, grid, dist_cache
            )


# ---------------------------------------------------------------------------
# Event dump
# ---------------------------------------------------------------------------

EVENTS_HEADER = [
    "user_id", "day", "cell_row", "cell_col", "regime",
    "start", "end", "power_kw", "energy_kwh",
]


def _local_instant(day: date, hour: float) -> str:
    base = datetime.combine(day, time(0, 0))
    return (base + timedelta(seconds=round(hour * 3600.0))).isoformat()


def write_events_csv(events: Iterable[ChargeEvent], path) -> None:
    """Local-clock event dump; timestamps rounded to whole seconds."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENTS_HEADER)
        for e in events:
            writer.writerow(
                [
                    e.user_id,
                    e.day.isoformat(),
                    e.cell.row,
                    e.cell.col,
                    e.regime.value,
                    _local_instant(e.day, e.start_hour),
                    _local_instant(e.day, e.end_hour),
                    repr(e.power_kw),
                    repr(e.energy_kwh),
                ]
            )
