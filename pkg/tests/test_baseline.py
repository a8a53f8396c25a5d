"""Night fraction, household baseline arithmetic, coverage statistics."""

from __future__ import annotations

import numpy as np
import pytest

from v2grid import (
    DegenerateRegressorError,
    DemandCurve,
    InvalidInputError,
    MissingHouseholdDataError,
    PvWindow,
    UndefinedFractionError,
    coverage_and_stats,
    household_baselines,
    household_night_energy,
    make_rect_area,
    night_fraction,
    read_demand_csv,
)

WINDOW = PvWindow(9.0, 17.0)


def flat_curve(n=48, value=1.0) -> DemandCurve:
    return DemandCurve(tuple([value] * n))


def spike_curve(lo_hour: float, hi_hour: float, n=48) -> DemandCurve:
    dt = 24.0 / n
    vals = [1.0 if lo_hour <= i * dt and (i + 1) * dt <= hi_hour else 0.0 for i in range(n)]
    return DemandCurve(tuple(vals))


class TestNightFraction:
    def test_flat_curve_gives_two_thirds_exactly(self):
        # 16 of 24 hours lie outside the 9-17 window
        assert night_fraction(flat_curve(), WINDOW) == 2.0 / 3.0

    def test_demand_only_inside_window_gives_zero(self):
        assert night_fraction(spike_curve(10.0, 11.0), WINDOW) == 0.0

    def test_demand_only_after_window_gives_one(self):
        assert night_fraction(spike_curve(17.0, 18.0), WINDOW) == 1.0

    def test_all_zero_curve_is_undefined(self):
        with pytest.raises(UndefinedFractionError):
            night_fraction(DemandCurve(tuple([0.0] * 48)), WINDOW)

    def test_straddling_sample_splits_pro_rata(self):
        # 2-hour samples; the 8-10 sample is half night
        curve = flat_curve(n=12)
        frac = night_fraction(curve, WINDOW)
        assert frac == pytest.approx(2.0 / 3.0, abs=1e-12)
        only = DemandCurve(tuple(1.0 if i == 4 else 0.0 for i in range(12)))
        assert night_fraction(only, WINDOW) == pytest.approx(0.5, abs=1e-12)

    def test_scaling_demand_leaves_fraction_unchanged(self):
        rng = np.random.default_rng(3)
        vals = tuple(float(v) for v in rng.uniform(0.1, 5.0, size=48))
        c1 = DemandCurve(vals)
        c2 = DemandCurve(tuple(3.7 * v for v in vals))
        assert night_fraction(c1, WINDOW) == pytest.approx(
            night_fraction(c2, WINDOW), abs=1e-12
        )

    def test_whole_day_window_gives_zero(self):
        assert night_fraction(flat_curve(), PvWindow(0.0, 24.0)) == 0.0

    def test_nearly_empty_window_approaches_one(self):
        assert night_fraction(flat_curve(n=96), PvWindow(12.0, 12.25)) == pytest.approx(
            1.0 - 0.25 / 24.0, abs=1e-12
        )

    def test_fraction_always_within_unit_interval(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.choice([12, 24, 48, 96, 288]))
            vals = tuple(float(v) for v in rng.uniform(0.0, 10.0, size=n))
            if sum(vals) == 0.0:
                continue
            lo = float(rng.uniform(0.0, 23.0))
            hi = float(rng.uniform(lo + 0.5, 24.0))
            frac = night_fraction(DemandCurve(vals), PvWindow(lo, hi))
            assert 0.0 <= frac <= 1.0


def area(area_id="A01", households=10_000, kwh=300.0):
    return make_rect_area(
        area_id, 0.0, 0.1, 0.0, 0.1, area_m2=1e6,
        households=households, monthly_kwh_per_household=kwh,
    )


class TestHouseholdNightEnergy:
    def test_reference_arithmetic(self):
        # 300 kWh/month * 10000 households / 30 days * 2/3 = 66 666.7 kWh
        e = household_night_energy(area(), 30, 2.0 / 3.0)
        assert e == pytest.approx(66_666.66666666666, abs=1e-6)

    def test_zero_households(self):
        assert household_night_energy(area(households=0), 30, 0.5) == 0.0

    def test_fraction_one_gives_full_daily_energy(self):
        assert household_night_energy(area(), 30, 1.0) == pytest.approx(100_000.0, rel=1e-12)

    def test_missing_data_raises(self):
        bare = make_rect_area("A02", 0.0, 0.1, 0.0, 0.1, area_m2=1e6)
        with pytest.raises(MissingHouseholdDataError):
            household_night_energy(bare, 30, 0.5)

    def test_baseline_table_skips_missing_areas(self):
        bare = make_rect_area("A02", 0.0, 0.1, 0.0, 0.1, area_m2=1e6)
        table, skipped = household_baselines([area(), bare], 30, 0.5)
        assert set(table) == {"A01"}
        assert skipped == 1
        assert table["A01"].e_hh_day_kwh == pytest.approx(100_000.0, rel=1e-12)


class TestCoverageAndStats:
    def test_exact_proportionality_recovers_slope_r_one(self):
        e_hh = {f"A{i:02d}": 1000.0 + 250.0 * i for i in range(10)}
        c = 0.137
        e_ev = {k: c * v for k, v in e_hh.items()}
        result = coverage_and_stats(e_ev, e_hh)
        s = result.stats
        assert s is not None
        assert s.pearson_r == pytest.approx(1.0, abs=1e-9)
        assert s.r_squared == pytest.approx(1.0, abs=1e-9)
        assert s.ols_slope == pytest.approx(c, abs=1e-9)
        assert s.ols_intercept == pytest.approx(0.0, abs=1e-6)
        for k in e_hh:
            assert result.ratios[k] == pytest.approx(c, rel=1e-12)

    def test_constant_household_energy_is_degenerate(self):
        e_hh = {"A": 5.0, "B": 5.0, "C": 5.0}
        e_ev = {"A": 1.0, "B": 2.0, "C": 3.0}
        with pytest.raises(DegenerateRegressorError):
            coverage_and_stats(e_ev, e_hh)

    def test_constant_supply_withholds_stats(self):
        e_hh = {"A": 5.0, "B": 6.0, "C": 7.0}
        e_ev = {"A": 0.0, "B": 0.0, "C": 0.0}
        result = coverage_and_stats(e_ev, e_hh)
        assert result.stats is None
        assert "zero variance" in result.stats_note

    def test_fewer_than_three_pairs_withholds_stats(self):
        result = coverage_and_stats({"A": 1.0, "B": 2.0}, {"A": 4.0, "B": 5.0})
        assert result.stats is None
        assert result.ratios == {"A": 0.25, "B": 0.4}

    def test_histogram_counts_sum_to_paired_areas(self):
        rng = np.random.default_rng(5)
        e_hh = {f"A{i}": float(rng.uniform(100, 200)) for i in range(25)}
        e_ev = {k: float(rng.uniform(5, 60)) for k in e_hh}
        result = coverage_and_stats(e_ev, e_hh, bin_width=0.05)
        assert sum(c for _, _, c in result.histogram) == result.n_paired == 25
        for low, high, _ in result.histogram:
            assert high - low == pytest.approx(0.05, abs=1e-12)

    def test_r_squared_equals_r_squared_of_pearson(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            x = rng.uniform(10, 100, size=20)
            y = 0.3 * x + rng.normal(0, 5.0, size=20)
            e_hh = {f"A{i}": float(v) for i, v in enumerate(x)}
            e_ev = {f"A{i}": float(v) for i, v in enumerate(y)}
            result = coverage_and_stats(e_ev, e_hh)
            s = result.stats
            assert s.r_squared == pytest.approx(s.pearson_r**2, abs=1e-12)

    def test_strong_correlation_has_tiny_p_value(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(10, 100, size=40)
        y = 0.2 * x + rng.normal(0, 0.5, size=40)
        e_hh = {f"A{i}": float(v) for i, v in enumerate(x)}
        e_ev = {f"A{i}": float(v) for i, v in enumerate(y)}
        s = coverage_and_stats(e_ev, e_hh).stats
        assert s.p_value < 0.001

    def test_areas_with_zero_household_energy_are_excluded(self):
        e_hh = {"A": 5.0, "B": 0.0, "C": 7.0, "D": 9.0}
        e_ev = {"A": 1.0, "B": 2.0, "C": 3.0, "D": 4.0}
        result = coverage_and_stats(e_ev, e_hh)
        assert "B" not in result.ratios
        assert result.n_paired == 3


class TestDemandCsv:
    def test_round_trip(self, tmp_path):
        from v2grid import write_demand_curve_csv

        path = tmp_path / "demand.csv"
        write_demand_curve_csv(path)
        curve = read_demand_csv(path)
        assert len(curve.values) == 48
        assert curve.sample_hours == 0.5
        frac = night_fraction(curve, WINDOW)
        assert 0.0 < frac < 1.0

    def test_irregular_spacing_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_of_day,demand\n00:00,1.0\n00:30,1.0\n02:00,1.0\n")
        with pytest.raises(InvalidInputError):
            read_demand_csv(path)

    def test_negative_demand_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_of_day,demand\n00:00,1.0\n12:00,-1.0\n")
        with pytest.raises(InvalidInputError):
            read_demand_csv(path)
