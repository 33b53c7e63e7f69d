import textwrap

import pytest

from opln import config as cfg
from opln import designer as d
from opln.phasematch import GvmCondition, solve_gvm_wavelength


def write(tmp_path, text, name="job.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text).lstrip())
    return p


def test_minimal_job_uses_defaults(tmp_path):
    job = cfg.load_design_job(write(tmp_path, "target: {gvm: 3}\n"))
    assert job.problem.signal_wavelength == solve_gvm_wavelength(GvmCondition.GVM3, 20.0)
    assert job.problem.length == 30.0
    assert job.problem.schedule == d.Schedule()
    assert job.pso_duty.init_spread == d.default_duty_pso().init_spread
    assert job.seed == 0 and job.output is None


def test_full_job(tmp_path):
    job = cfg.load_design_job(write(tmp_path, """
        target: {signal_um: 3.4, idler_um: 3.6}
        crystal: {length_mm: 12, temperature_c: 40}
        analysis: {slice_count: 101, window_nm: 80, grid: 64}
        pump: {center_offset_nm: 3, width_nm: [1, 10]}
        schedule: {pump_iterations: 5, duty_iterations: 7, rounds: 2}
        init: flat
        seed: 9
        pso_pump: {swarm_size: 8, stall_tolerance: [4, 1.0e-9]}
        pso_duty: {swarm_size: 10, inertia: 0.6}
        output: out/run
    """))
    p = job.problem
    assert (p.signal_wavelength, p.idler_wavelength) == (3.4, 3.6)
    assert (p.length, p.temperature, p.slice_count, p.window, p.grid) == (12.0, 40.0, 101, 80.0, 64)
    assert p.pump_width_bounds == (1.0, 10.0) and p.pump_center_offset == 3.0
    assert p.schedule == d.Schedule(5, 7, 2) and p.init == "flat"
    assert job.seed == 9 and str(job.output) == "out/run"
    assert job.pso_pump.swarm_size == 8 and job.pso_pump.stall_tolerance == (4, 1e-9)
    assert job.pso_duty.inertia == 0.6


@pytest.mark.parametrize("text, line, fragment", [
    ("target: {gvm: 3}\ncrystal:\n  length_mm: 30\n  lenght: 2\n", 4, "unknown key 'lenght' in crystal"),
    ("target: {gvm: 3}\nseed: 1\nseed: 2\n", 3, "duplicate key 'seed'"),
    ("target: {gvm: 3}\ncrystal: {length_mm: thirty}\n", 2, "crystal.length_mm must be a number"),
    ("target: {gvm: 3}\nanalysis:\n  grid: 20.5\n", 3, "analysis.grid must be an integer"),
    ("target: {gvm: 7}\n", 1, "unknown GVM condition"),
    ("target: {gvm: 3, signal_um: 3.5}\n", 1, "exactly one of"),
    ("crystal: {length_mm: 3}\n", 1, "missing required section 'target'"),
    ("target: {gvm: 3}\ninit: gaussian\n", 2, "init must be one of"),
    ("target: {gvm: 3}\npump: {width_nm: [1]}\n", 2, "two-element list"),
    ("target: {gvm: 3}\nbogus: 1\n", 2, "unknown key 'bogus' in config"),
    ("target: [gvm\n", 2, "YAML syntax error"),
])
def test_errors_carry_line_numbers(tmp_path, text, line, fragment):
    p = write(tmp_path, text)
    with pytest.raises(cfg.ConfigError) as exc:
        cfg.load_design_job(p)
    msg = str(exc.value)
    assert msg.startswith(f"{p}:{line}:"), msg
    assert fragment in msg


def test_invalid_pso_value_is_config_error(tmp_path):
    p = write(tmp_path, "target: {gvm: 3}\npso_duty: {inertia: 1.5}\n")
    with pytest.raises(cfg.ConfigError, match="inertia"):
        cfg.load_design_job(p)


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(cfg.ConfigError, match="empty config"):
        cfg.load_design_job(write(tmp_path, ""))
    with pytest.raises(cfg.ConfigError, match="cannot read"):
        cfg.load_design_job(tmp_path / "nope.yaml")


@pytest.mark.parametrize("name", cfg.scenario_names())
def test_shipped_scenarios_load(name):
    job = cfg.load_design_job(cfg.resolve_config(name))
    assert job.seed == 1
    assert job.output is not None and job.output.name == name
    expected_length = 10.0 if name.endswith("_desk") else (50.0 if name.startswith(("degenerate_3p8", "degenerate_4p0")) else 30.0)
    assert job.problem.length == expected_length


def test_scenario_set():
    names = cfg.scenario_names()
    assert len(names) == 20
    assert {"gvm3_desk", "gvm3_full", "degenerate_3p5um_full"} <= set(names)


def test_resolve_unknown_name():
    with pytest.raises(cfg.ConfigError, match="no such file or shipped scenario"):
        cfg.resolve_config("not_a_scenario")
