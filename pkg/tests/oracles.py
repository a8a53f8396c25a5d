"""Independent reference implementations used to cross-check the fast paths.

Nothing here reuses engine logic beyond the public parameter containers: the
battery oracle integrates minute by minute, and the attendance oracle scans
boolean day masks directly.
"""

from __future__ import annotations

from typing import Sequence

from v2grid import DayStay, GridSpec, PvWindow, VehicleParams, haversine_m


def brute_force_day(
    stays: Sequence[DayStay],
    params: VehicleParams,
    window: PvWindow,
    grid: GridSpec,
    step_minutes: float = 1.0,
):
    """Fixed-step SOC integrator for one day.

    Energy within a step is capped by the remaining headroom to the active
    target, so the stepper is exact whenever stay and window boundaries are
    aligned to whole steps. Returns (energy by (stay_idx, regime), final soc,
    applied jumps).
    """
    n_steps = int(round(24 * 60 / step_minutes))
    dt_h = 24.0 / n_steps
    soc = params.soc_initial
    cap = params.capacity_kwh
    energy: dict[tuple[int, str], float] = {}
    jumps: list[float] = []

    # integer sub-minute bounds keep step membership exact for aligned input
    bounds = [
        (int(round(st.start_hour * 60 / step_minutes)),
         int(round(st.end_hour * 60 / step_minutes)))
        for st in stays
    ]
    win_lo = window.start_hour * 60 / step_minutes
    win_hi = window.end_hour * 60 / step_minutes

    def stay_at(k: int):
        for idx, (s, e) in enumerate(bounds):
            if s <= k < e:
                return idx, stays[idx]
        return None, None

    prev_cell = None
    entered: set[int] = set()
    for k in range(n_steps):
        idx, st = stay_at(k)
        if st is None:
            continue
        if idx not in entered:
            entered.add(idx)
            if prev_cell is not None and st.cell != prev_cell:
                lat1, lon1 = grid.cell_centroid(prev_cell)
                lat2, lon2 = grid.cell_centroid(st.cell)
                dist_km = haversine_m(lat1, lon1, lat2, lon2) / 1000.0
                drop = dist_km / params.range_km
                applied = min(drop, soc)
                soc -= applied
                jumps.append(applied)
            prev_cell = st.cell
        if win_lo <= k < win_hi:
            if soc < params.pv_charge_target:
                e = min(
                    params.charge_power_kw * dt_h,
                    (params.pv_charge_target - soc) * cap,
                )
                soc += e / cap
                key = (idx, "PV_CHARGE")
                energy[key] = energy.get(key, 0.0) + e
        elif soc > params.soc_threshold:
            e = min(params.discharge_power_kw * dt_h, (soc - params.soc_threshold) * cap)
            soc -= e / cap
            key = (idx, "DISCHARGE")
            energy[key] = energy.get(key, 0.0) + e
        elif soc < params.soc_threshold:
            e = min(params.charge_power_kw * dt_h, (params.soc_threshold - soc) * cap)
            soc += e / cap
            key = (idx, "NONPV_CHARGE")
            energy[key] = energy.get(key, 0.0) + e
    return energy, soc, jumps


def longest_true_run(present: Sequence[bool]) -> int:
    """Length of the longest run of consecutive True entries."""
    best = run = 0
    for flag in present:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best


def group_events(events, stays: Sequence[DayStay]):
    """Engine events regrouped to the oracle's (stay index, regime) keys.

    Returns (energy sums, event counts) per group; stay indices are recovered
    by interval containment.
    """
    grouped: dict[tuple[int, str], float] = {}
    counts: dict[tuple[int, str], int] = {}
    for ev in events:
        idx = next(
            i
            for i, st in enumerate(stays)
            if st.start_hour - 1e-9 <= ev.start_hour and ev.end_hour <= st.end_hour + 1e-9
        )
        key = (idx, ev.regime.value)
        grouped[key] = grouped.get(key, 0.0) + ev.energy_kwh
        counts[key] = counts.get(key, 0) + 1
    return grouped, counts
