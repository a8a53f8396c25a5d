"""Command-line pipeline: exit codes, manifests, reproducibility."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from v2grid.cli import main


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_synth(tmp_path: Path, name: str, extra=()) -> Path:
    out = tmp_path / name
    code = main(
        [
            "synth", "--seed", "11", "--users", "40", "--days", "6",
            "--rows", "30", "--cols", "30", "--out", str(out),
            "--areas-out", str(tmp_path / "areas.geojson"),
            "--demand-out", str(tmp_path / "demand.csv"),
            *extra,
        ]
    )
    assert code == 0
    return out


OUTPUT_FILES = [
    "area_energy.csv", "area_peak.csv", "area_profile.csv",
    "coverage.csv", "coverage_hist.csv", "regression.txt", "metrics.geojson",
]


def run_pipeline(tmp_path: Path, records: Path, out_name: str, extra=()) -> Path:
    out_dir = tmp_path / out_name
    code = main(
        [
            "run", str(records), str(tmp_path / "areas.geojson"),
            str(tmp_path / "demand.csv"), "--out-dir", str(out_dir), *extra,
        ]
    )
    assert code == 0
    return out_dir


class TestSynthCommand:
    def test_same_flags_give_identical_digests(self, tmp_path):
        a = run_synth(tmp_path, "a.csv")
        b = run_synth(tmp_path, "b.csv")
        assert digest(a) == digest(b)

    def test_zero_users_exits_2(self, tmp_path):
        code = main(["synth", "--users", "0", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_header_row_present(self, tmp_path):
        out = run_synth(tmp_path, "records.csv")
        assert out.read_text().splitlines()[0] == "user_id,timestamp,lat,lon"


class TestRunCommand:
    def test_outputs_and_manifest_parameter_echo(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        out_dir = run_pipeline(tmp_path, records, "out")
        for name in OUTPUT_FILES + ["manifest.json"]:
            assert (out_dir / name).is_file(), name
        manifest = json.loads((out_dir / "manifest.json").read_text())
        params = manifest["parameters"]
        assert params["c_max_kwh"] == 25.0
        assert params["l_max_km"] == 135.0
        assert params["p_charge_kw"] == 6.6
        assert params["p_discharge_kw"] == 6.6
        assert params["c_thr"] == 0.5
        assert params["c_init"] == 0.5
        assert params["delta"] == 0.03
        assert params["pv_start"] == "09:00" and params["pv_end"] == "17:00"
        assert manifest["counts"]["users_retained"] > 0
        assert manifest["counts"]["events"] > 0
        for name in OUTPUT_FILES:
            assert manifest["outputs"][name] == digest(out_dir / name)

    def test_doubling_delta_doubles_area_energy(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        lo = run_pipeline(tmp_path, records, "lo", ["--delta", "0.03"])
        hi = run_pipeline(tmp_path, records, "hi", ["--delta", "0.06"])

        def read_energy(p: Path):
            with open(p / "area_energy.csv") as fh:
                return {
                    (r["area_id"], r["day"]): float(r["e_ev_kwh"])
                    for r in csv.DictReader(fh)
                }

        lo_e, hi_e = read_energy(lo), read_energy(hi)
        assert set(lo_e) == set(hi_e) and lo_e
        for key, v in lo_e.items():
            assert hi_e[key] == 2.0 * v

    def test_empty_records_file_exits_0_with_zero_aggregates(self, tmp_path):
        run_synth(tmp_path, "records.csv")  # produces areas + demand files
        empty = tmp_path / "empty.csv"
        empty.write_text("user_id,timestamp,lat,lon\n")
        out_dir = run_pipeline(tmp_path, empty, "out_empty")
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["warnings"]["empty_records_input"] is True
        assert manifest["counts"]["users_retained"] == 0
        with open(out_dir / "area_energy.csv") as fh:
            assert list(csv.DictReader(fh)) == []
        with open(out_dir / "coverage.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and all(float(r["e_ev_kwh"]) == 0.0 for r in rows)
        note = (out_dir / "regression.txt").read_text()
        assert "withheld" in note

    def test_missing_input_exits_2(self, tmp_path):
        run_synth(tmp_path, "records.csv")
        code = main(
            [
                "run", str(tmp_path / "nope.csv"), str(tmp_path / "areas.geojson"),
                str(tmp_path / "demand.csv"), "--out-dir", str(tmp_path / "x"),
            ]
        )
        assert code == 2

    def test_jobs_do_not_change_output_bytes(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        serial = run_pipeline(tmp_path, records, "serial", ["--jobs", "1"])
        parallel = run_pipeline(tmp_path, records, "parallel", ["--jobs", "2"])
        for name in OUTPUT_FILES:
            assert digest(serial / name) == digest(parallel / name), name

    def test_events_dump_optional(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        out_dir = run_pipeline(tmp_path, records, "ev", ["--events-csv"])
        lines = (out_dir / "events.csv").read_text().splitlines()
        assert lines[0] == (
            "user_id,day,cell_row,cell_col,regime,start,end,power_kw,energy_kwh"
        )
        assert len(lines) > 1

    def test_stays_dump_optional(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        out_dir = run_pipeline(tmp_path, records, "st", ["--stays-csv"])
        lines = (out_dir / "stays.csv").read_text().splitlines()
        assert lines[0] == "user_id,cell_row,cell_col,arrival,departure"
        assert len(lines) > 1
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert "stays.csv" in manifest["outputs"]

    def test_rerun_reproduces_identical_outputs(self, tmp_path):
        records = run_synth(tmp_path, "records.csv")
        first = run_pipeline(tmp_path, records, "r1")
        second = run_pipeline(tmp_path, records, "r2")
        for name in OUTPUT_FILES:
            assert digest(first / name) == digest(second / name)
        m1 = json.loads((first / "manifest.json").read_text())
        m2 = json.loads((second / "manifest.json").read_text())
        assert m1["outputs"] == m2["outputs"]
        assert m1["inputs"] == m2["inputs"]
