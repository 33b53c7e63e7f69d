import json
import math
import textwrap

import numpy as np
import pytest
import yaml

from opln import cli, designer, jsa
from opln import phasematch as pm
from opln.pso import read_history

TINY_JOB = """
target: {{gvm: 3}}
crystal: {{length_mm: 2}}
analysis: {{slice_count: 61, window_nm: 60, grid: 40}}
schedule: {{pump_iterations: 2, duty_iterations: 3, rounds: {rounds}}}
seed: 5
pso_pump: {{swarm_size: 6}}
pso_duty: {{swarm_size: 6, init_spread: 0.02}}
"""


def run(capsys, *args):
    code = cli.main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_gvm_json(self, capsys):
        code, out, _ = run(capsys, "gvm")
        rows = json.loads(out)
        assert code == 0
        assert [r["condition"] for r in rows] == ["GVM1", "GVM2", "GVM3"]
        lam3 = pm.solve_gvm_wavelength(3, 20.0)
        assert rows[2]["wavelength_nm"] == pytest.approx(lam3 * 1e3, rel=1e-12)
        assert rows[2]["tilt_deg"] == pytest.approx(45.0, abs=1e-6)

    def test_domain_error_is_2(self, capsys):
        code, _, err = run(capsys, "gvm", "--temp", "500")
        assert code == 2
        assert "temperature" in err

    def test_usage_error_is_1(self, capsys):
        assert run(capsys, "gvm", "--nonsense")[0] == 1
        assert run(capsys, "period")[0] == 1

    def test_config_error_is_1(self, capsys, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("target: {gvm: 3}\ncrystal:\n  lenght: 3\n")
        code, _, err = run(capsys, "design", str(bad), "--out", str(tmp_path / "o"))
        assert code == 1
        assert f"{bad}:3: unknown key 'lenght'" in err

    def test_period_matches_library(self, capsys):
        code, out, _ = run(capsys, "period", "--signal", "3.4", "--idler", "3.6")
        rec = json.loads(out)
        pump = 1 / (1 / 3.4 + 1 / 3.6)
        assert code == 0
        assert rec["poling_period"] == pytest.approx(pm.poling_period(pump, 3.4, 3.6, 20.0), rel=1e-12)

    def test_scenarios_listed(self, capsys):
        code, out, _ = run(capsys, "scenarios")
        assert code == 0 and "gvm3_desk" in json.loads(out)


class TestSweepTemp:
    def test_header_and_rows(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        code, _, _ = run(capsys, "sweep-temp", "--gvm", "3", "--start", "20", "--stop", "30", "--step", "5",
                         "--out", str(out))
        header, rows = cli.read_csv(out)
        assert code == 0
        assert header == ["temperature_c", "pump_um", "signal_um", "idler_um", "period_um"]
        assert rows[:, 0].tolist() == [20.0, 25.0, 30.0]
        assert np.allclose(1 / rows[:, 1], 1 / rows[:, 2] + 1 / rows[:, 3], rtol=0, atol=1e-12)

    def test_single_row_when_start_equals_stop(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        code, _, _ = run(capsys, "sweep-temp", "--period", "17.5", "--pump", "1.75", "--start", "40", "--stop",
                         "40", "--out", str(out))
        _, rows = cli.read_csv(out)
        assert code == 0 and rows.shape == (1, 5) and rows[0, 0] == 40.0

    def test_gvm_track_row_is_degenerate(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        run(capsys, "sweep-temp", "--gvm", "1", "--mode", "gvm-track", "--start", "60", "--stop", "60",
            "--out", str(out))
        _, rows = cli.read_csv(out)
        assert rows[0, 2] == rows[0, 3] == pytest.approx(pm.solve_gvm_wavelength(1, 60.0), rel=1e-12)

    def test_conflicting_sources(self, capsys):
        assert run(capsys, "sweep-temp", "--gvm", "3", "--period", "17")[0] == 1


class TestAnalyze:
    def test_flat_gvm3_with_exports(self, capsys, tmp_path):
        stem = tmp_path / "flat"
        code, out, _ = run(capsys, "analyze", "--gvm", "3", "--length-mm", "5", "--grid", "60", "--bandwidth", "4",
                           "--out", str(stem))
        rec = json.loads(out)
        assert code == 0
        assert 0 < rec["purity"] <= 1 and rec["pump_bandwidth_nm"] == 4.0
        g = jsa.read_jsa(str(stem) + "_complex.npz")
        assert g.amplitude.shape == (60, 60)
        assert jsa.schmidt_purity(g).purity == pytest.approx(rec["purity"], rel=1e-12)
        off, proj = jsa.read_projection(rec["files"]["projection"])
        assert off.size == proj.size == 2 * 60 - 1
        assert rec["side_lobe_ratio"] == pytest.approx(jsa.side_lobe_ratio(proj), rel=1e-12)

    def test_sweep_window_csv(self, capsys, tmp_path):
        out = tmp_path / "w.csv"
        code, _, _ = run(capsys, "sweep-window", "--gvm", "3", "--length-mm", "5", "--grid", "40",
                         "--bandwidth", "4", "--windows", "60,120", "--out", str(out))
        header, rows = cli.read_csv(out)
        assert code == 0 and header == ["window_nm", "purity"] and rows[:, 0].tolist() == [60.0, 120.0]

    def test_sweep_pump_csv(self, capsys, tmp_path):
        out = tmp_path / "p.csv"
        code, _, _ = run(capsys, "sweep-pump", "--gvm", "3", "--length-mm", "5", "--grid", "30", "--bandwidth",
                         "4", "--start", "1.750", "--stop", "1.752", "--step", "0.001", "--out", str(out))
        header, rows = cli.read_csv(out)
        assert code == 0 and header == ["pump_um", "signal_um", "idler_um", "purity"]
        assert rows.shape == (3, 4) and np.all(np.isfinite(rows))

    def test_sweep_pump_marks_unmatched_pumps(self, capsys, caplog, tmp_path):
        out = tmp_path / "p.csv"
        code, _, _ = run(capsys, "sweep-pump", "--gvm", "3", "--length-mm", "5", "--grid", "30", "--bandwidth",
                           "4", "--start", "1.74", "--stop", "1.75", "--step", "0.01", "--out", str(out))
        _, rows = cli.read_csv(out)
        assert code == 0 and np.isnan(rows[0, 3]) and np.isfinite(rows[1, 3])
        assert "skipped" in caplog.text


class TestDesign:
    @staticmethod
    @pytest.fixture(scope="class")
    def finished(tmp_path_factory):
        root = tmp_path_factory.mktemp("design")
        job = root / "job.yaml"
        job.write_text(textwrap.dedent(TINY_JOB.format(rounds=2)))
        assert cli.main(["-q", "design", str(job), "--out", str(root / "full")]) == 0
        return root, job

    def test_outputs(self, finished):
        root, _ = finished
        out = root / "full"
        res = designer.read_design(out / "design.yaml")
        hist = read_history(out / "cost_history.csv")
        assert 0 < res.purity <= 1
        assert hist.size == 2 * (2 + 3) and np.all(np.diff(hist) <= 0)
        prof = designer.read_profile_csv(out / "profile.csv", res.profile.length)
        assert np.array_equal(prof.duty_cycles, res.profile.duty_cycles)
        g = jsa.read_jsa(out / "jsa_complex.npz")
        assert jsa.schmidt_purity(g).purity == pytest.approx(res.purity, rel=1e-12)
        assert (out / "projection.csv").exists() and (out / "checkpoint.yaml").exists()

    def test_rerun_is_byte_identical(self, finished, tmp_path):
        root, job = finished
        assert cli.main(["-q", "design", str(job), "--out", str(tmp_path)]) == 0
        for name in ("design.yaml", "profile.csv", "cost_history.csv", "jsa_intensity.csv", "projection.csv"):
            assert (tmp_path / name).read_bytes() == (root / "full" / name).read_bytes(), name

    def test_resume_matches_uninterrupted(self, finished, tmp_path):
        root, job = finished
        short = tmp_path / "short.yaml"
        short.write_text(textwrap.dedent(TINY_JOB.format(rounds=1)))
        out = tmp_path / "o"
        assert cli.main(["-q", "design", str(short), "--out", str(out)]) == 0
        # pretend the one-round run was the first round of the two-round job
        ck = out / "checkpoint.yaml"
        doc = yaml.safe_load(ck.read_text())
        doc["provenance"]["problem"]["schedule"]["rounds"] = 2
        ck.write_text(yaml.safe_dump(doc, sort_keys=False))
        assert cli.main(["-q", "design", str(job), "--out", str(out), "--resume"]) == 0
        a = designer.read_design(out / "design.yaml")
        b = designer.read_design(root / "full" / "design.yaml")
        assert np.array_equal(a.profile.duty_cycles, b.profile.duty_cycles)
        assert a.purity == b.purity and a.pump == b.pump
        assert np.array_equal(read_history(out / "cost_history.csv"),
                              read_history(root / "full" / "cost_history.csv"))

    def test_seed_override(self, finished, tmp_path, capsys):
        _, job = finished
        code, out, _ = run(capsys, "-q", "design", str(job), "--out", str(tmp_path), "--seed", "11")
        assert code == 0 and json.loads(out)["seed"] == 11

    def test_analyze_frozen_design(self, finished, capsys):
        root, _ = finished
        res = designer.read_design(root / "full" / "design.yaml")
        code, out, _ = run(capsys, "analyze", str(root / "full" / "design.yaml"), "--grid", "40")
        assert code == 0
        assert json.loads(out)["purity"] == pytest.approx(res.purity, rel=1e-12)

    def test_analyze_profile_csv(self, finished, capsys):
        root, _ = finished
        code, out, _ = run(capsys, "analyze", str(root / "full" / "profile.csv"), "--length-mm", "2",
                           "--grid", "40", "--bandwidth", "5")
        rec = json.loads(out)
        assert code == 0 and math.isfinite(rec["purity"]) and rec["length_mm"] == 2.0
        # a GVM3 period sits on the peak of the degenerate-period curve
        assert rec["signal_um"] == pytest.approx(pm.solve_gvm_wavelength(3, 20.0), abs=2e-4)

    def test_two_degenerate_solutions(self):
        lo = cli._degenerate_for_period(17.5, 20.0)
        hi = cli._degenerate_for_period(17.5, 20.0, hint=4.5)
        assert lo < 3.5 < hi
        for lam in (lo, hi):
            assert pm.poling_period(lam / 2, lam, lam, 20.0) == pytest.approx(17.5, rel=1e-10)
