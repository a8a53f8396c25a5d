"""Charging-point sizing and PV sufficiency across a demand-density sweep.

Shows the closed-form relations directly: density p = P/A, implied charging
points P/(A*P_charge), and the PV potential eta * a_pv * I they compete with.
"""

from v2grid import peak_density_and_sizing, pv_sufficiency

P_CHARGE_KW = 6.6
AREA_M2 = 1_000_000.0  # one square kilometre

support = pv_sufficiency(pv_efficiency=0.2, panel_area_fraction=0.25,
                         irradiance_w_per_m2=400.0)
print(f"PV potential at 20% efficiency, 25% panel coverage, 400 W/m2 irradiance:"
      f" {support.p_pv_w_per_m2:.1f} W/m2\n")

print(f"{'peak MW/km2':>12} {'density W/m2':>13} {'points/km2':>11} {'PV covers?':>11}")
for peak_mw in (1, 3, 6, 12, 20, 24, 30):
    peak_kw = peak_mw * 1000.0
    sizing = peak_density_and_sizing(peak_kw, AREA_M2, P_CHARGE_KW)
    covered = sizing.density_w_per_m2 <= support.p_pv_w_per_m2
    print(
        f"{peak_mw:12.0f} {sizing.density_w_per_m2:13.1f} "
        f"{sizing.points_per_km2:11.0f} {'yes' if covered else 'NO':>11}"
    )

print(
    "\na 24 W/m2 hotspot needs "
    f"{peak_density_and_sizing(24_000.0, AREA_M2, P_CHARGE_KW).points_per_km2:.0f}"
    " charging points per km2 and exceeds what local PV alone can deliver"
)
