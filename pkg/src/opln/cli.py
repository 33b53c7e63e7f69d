"""``opln`` command-line front end.

Summaries go to stdout as JSON, progress to stderr.  Exit codes: 0 success,
1 usage or config error, 2 domain/physics error, 3 numerical failure.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import designer, jsa, phasematch
from .config import ConfigError, load_design_job, resolve_config, scenario_names
from .dispersion import DATA_DIR_ENV, DomainError
from .pso import write_history

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("opln")


def _emit(record) -> None:
    click.echo(json.dumps(record, indent=2, default=float))


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def _writable(path: Path) -> Path:
    parent = path.parent if path.suffix else path
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise click.UsageError(f"cannot create output directory {parent}: {exc.strerror}") from None
    if not os.access(parent, os.W_OK):
        raise click.UsageError(f"output directory {parent} is not writable")
    return path


def _sweep_rows(points):
    return [
        (p.temperature, p.pump_wavelength, p.signal_wavelength, p.idler_wavelength, p.poling_period)
        for p in points
    ]


SWEEP_HEADER = ["temperature_c", "pump_um", "signal_um", "idler_um", "period_um"]


def write_csv(path, header, rows) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if path:
            fh.close()


def read_csv(path):
    """Header and float rows of any CSV this tool writes."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return [h.strip() for h in rows[0]], np.array([[float(v) for v in r] for r in rows[1:]])


@click.group()
@click.option("--data-dir", type=click.Path(file_okay=False, exists=True), default=None,
              help=f"Coefficient directory (default: ${DATA_DIR_ENV} or the bundled data).")
@click.option("-q", "--quiet", is_flag=True, help="Only warnings on stderr.")
@click.option("-v", "--verbose", is_flag=True, help="Debug output on stderr.")
def cli(data_dir, quiet, verbose):
    """Design aperiodically poled LiNbO3 crystals for pure photon pairs."""
    if data_dir:
        os.environ[DATA_DIR_ENV] = data_dir
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(message)s")


@cli.command()
@click.option("--temp", "temperature", type=float, default=20.0, show_default=True, help="Temperature in C.")
@click.option("--condition", type=click.Choice(["1", "2", "3"]), default=None, help="Only this GVM condition.")
def gvm(temperature, condition):
    """Degenerate GVM wavelengths, tilt angles and periods."""
    conds = [phasematch.GvmCondition.parse(condition)] if condition else list(phasematch.GvmCondition)
    rows = []
    for c in conds:
        lam = phasematch.solve_gvm_wavelength(c, temperature)
        p = phasematch.degenerate_point(lam, temperature)
        rows.append({
            "condition": c.name,
            "wavelength_nm": lam * 1e3,
            "tilt_deg": phasematch.tilt_angle(p.pump_wavelength, lam, lam, temperature),
            "poling_period_um": p.poling_period,
            "temperature_c": temperature,
        })
    _emit(rows)


@cli.command()
@click.option("--signal", type=float, default=None, help="Signal wavelength in um.")
@click.option("--idler", type=float, default=None, help="Idler wavelength in um (default: degenerate).")
@click.option("--gvm", "condition", type=click.Choice(["1", "2", "3"]), default=None, help="Use a GVM point.")
@click.option("--temp", "temperature", type=float, default=20.0, show_default=True)
def period(signal, idler, condition, temperature):
    """First-order poling period for a signal/idler pair."""
    if (signal is None) == (condition is None):
        raise click.UsageError("give exactly one of --signal or --gvm")
    if condition:
        signal = phasematch.solve_gvm_wavelength(condition, temperature)
    idler = signal if idler is None else idler
    pump = float(phasematch.pump_from(signal, idler))
    lam = phasematch.poling_period(pump, signal, idler, temperature)
    _emit(phasematch.PhaseMatchPoint(pump, signal, idler, temperature, lam).to_dict())


def _write_design_outputs(result: designer.DesignResult, out: Path) -> dict:
    designer.write_design(result, out / "design.yaml")
    designer.write_profile_csv(result.profile, out / "profile.csv")
    write_history(result.cost_history, out / "cost_history.csv")
    paths = {"design": str(out / "design.yaml"), "profile": str(out / "profile.csv"),
             "cost_history": str(out / "cost_history.csv")}
    if result.jsa is not None:
        paths.update(jsa.write_jsa(result.jsa, out / "jsa"))
        off, proj = jsa.antidiagonal_projection(result.jsa)
        jsa.write_projection(off, proj, out / "projection.csv")
        paths["projection"] = str(out / "projection.csv")
    return paths


@cli.command()
@click.argument("config")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (overrides config).")
@click.option("--resume", is_flag=True, help="Continue from the checkpoint in the output directory.")
@click.option("--threads", type=click.IntRange(1), default=1, show_default=True, help="Worker cap.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def design(config, out, resume, threads, seed):
    """Optimize a crystal from a job CONFIG file or shipped scenario name."""
    config = resolve_config(config)
    job = load_design_job(config)
    out_dir = Path(out) if out else job.output or Path(config).with_suffix("")
    _writable(out_dir / "design.yaml")
    seed = job.seed if seed is None else seed
    ckpt = out_dir / "checkpoint.yaml"
    if resume and not ckpt.exists():
        log.warning("no checkpoint at %s; starting fresh", ckpt)
    result = designer.optimize(job.problem, job.pso_pump, job.pso_duty, seed=seed, threads=threads,
                               checkpoint=ckpt, resume=resume)
    result.provenance["config_file"] = str(config)
    files = _write_design_outputs(result, out_dir)
    _emit({**result.summary(), "seed": seed, "files": files})


def _bare(profile, pump_center, temperature, provenance=None):
    # placeholder bandwidth; callers either match it or pass one explicitly
    return designer.DesignResult(jsa.PumpSpec(pump_center, 1.0), profile, float("nan"), np.array([]), None,
                                 provenance or {}, temperature=temperature)


def _prepare(source, condition, signal, init, length_mm, temperature, pump_center, bandwidth, matched):
    """Design to analyze, pump centre, bandwidth and whether to match it."""
    if source and str(source).endswith((".yaml", ".yml")):
        res = designer.read_design(source)
        if temperature is not None:
            res.temperature = temperature
        center = res.pump.center_wavelength if pump_center is None else pump_center
        return res, center, bandwidth, matched
    T = 20.0 if temperature is None else temperature
    if source:
        prof = designer.read_profile_csv(source, length_mm)
        lam = _degenerate_for_period(prof.period, T, signal)
        res = _bare(prof, lam / 2.0, T)
    elif condition is not None or signal is not None:
        kw = {"length": length_mm or 30.0, "init": init}
        if condition is not None:
            problem = designer.DesignProblem.for_gvm(condition, T, **kw)
        else:
            problem = designer.DesignProblem(signal, temperature=T, **kw)
        res = _bare(designer.initial_profile(problem), problem.pump_wavelength, T,
                    {"problem": designer.problem_to_dict(problem)})
    else:
        raise click.UsageError("give a design/profile file, --gvm or --signal")
    center = res.pump.center_wavelength if pump_center is None else pump_center
    return res, center, bandwidth, matched or bandwidth is None


def _degenerate_for_period(period_um, temperature, hint=None):
    """Degenerate wavelength whose first-order period equals ``period_um``.

    The degenerate period peaks at the GVM3 point, so most periods have two
    solutions and the peak itself is a tangent root.  ``hint`` picks the
    nearest solution; without it the shorter wavelength wins.
    """
    from scipy import optimize

    def f(x):
        return phasematch.poling_period(x / 2, x, x, temperature) - period_um

    xs = np.linspace(2.6, 4.9, 47)
    vals = [f(x) for x in xs]
    roots = [optimize.brentq(f, a, b, xtol=1e-12)
             for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]) if fa * fb <= 0]
    k = int(np.argmax(vals))
    if 0 < k < len(xs) - 1:
        peak = optimize.minimize_scalar(lambda x: -f(x), bounds=(xs[k - 1], xs[k + 1]), method="bounded",
                                        options={"xatol": 1e-10})
        if abs(f(peak.x)) < 1e-9 * period_um:
            roots.append(float(peak.x))
    if not roots:
        raise phasematch.NoPhaseMatchingError(f"no degenerate wavelength phase-matches period {period_um} um")
    roots = [r for n, r in enumerate(sorted(roots)) if n == 0 or r - sorted(roots)[n - 1] > 1e-6]
    if hint is not None:
        return min(roots, key=lambda r: abs(r - hint))
    if len(roots) > 1:
        log.info("period %.6g um is degenerate at %s um; using %.6g (pass --signal to choose)",
                 period_um, ", ".join(f"{r:.6g}" for r in roots), roots[0])
    return roots[0]


def _analysis_options(f):
    opts = [
        click.argument("source", required=False, type=click.Path(exists=True, dir_okay=False)),
        click.option("--gvm", "condition", type=click.Choice(["1", "2", "3"]), default=None,
                     help="Analyze a flat or erf-initialized crystal at a GVM point."),
        click.option("--signal", type=float, default=None, help="Degenerate wavelength for a built-in profile (um)."),
        click.option("--init", type=click.Choice(["flat", "erf"]), default="flat", show_default=True),
        click.option("--length-mm", type=float, default=None, help="Crystal length (profile CSV or built-in)."),
        click.option("--temp", "temperature", type=float, default=None, help="Temperature in C (default: design's)."),
        click.option("--pump-center", type=float, default=None, help="Pump centre in um."),
        click.option("--bandwidth", type=float, default=None, help="Pump bandwidth in nm."),
        click.option("--matched", is_flag=True, help="Use the purity-maximizing bandwidth."),
        click.option("--grid", type=click.IntRange(2), default=200, show_default=True),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _pump_for(res, center, bandwidth, matched, window, grid):
    if matched:
        s, i = phasematch.phase_matched_pair(res.profile.period, center, res.temperature)
        bw, _ = designer.matched_bandwidth(res.profile, (s, i), center, res.temperature, window, grid)
        return jsa.PumpSpec(center, bw)
    return jsa.PumpSpec(center, bandwidth if bandwidth is not None else res.pump.bandwidth)


@cli.command()
@_analysis_options
@click.option("--window", type=float, default=60.0, show_default=True, help="Analysis window in nm.")
@click.option("--out", type=click.Path(), default=None, help="Export stem for JSA and projection files.")
def analyze(source, condition, signal, init, length_mm, temperature, pump_center, bandwidth, matched, grid,
            window, out):
    """Purity and JSA of a frozen design, profile CSV or built-in baseline."""
    res, center, bandwidth, matched = _prepare(source, condition, signal, init, length_mm, temperature,
                                               pump_center, bandwidth, matched)
    pump = _pump_for(res, center, bandwidth, matched, window, grid)
    purity, g = designer.evaluate_profile(res.profile, pump, res.temperature, window, grid)
    record = {
        "purity": purity,
        "pump_center_um": pump.center_wavelength,
        "pump_bandwidth_nm": pump.bandwidth,
        "signal_um": float(np.mean(g.signal_axis)),
        "idler_um": float(np.mean(g.idler_axis)),
        "poling_period_um": res.profile.period,
        "length_mm": res.profile.length,
        "window_nm": window,
        "grid": grid,
        "temperature_c": res.temperature,
    }
    if out:
        stem = _writable(Path(out + ".csv")).with_suffix("")
        record["files"] = jsa.write_jsa(g, stem)
        off, proj = jsa.antidiagonal_projection(g)
        jsa.write_projection(off, proj, str(stem) + "_projection.csv")
        record["files"]["projection"] = str(stem) + "_projection.csv"
        record["side_lobe_ratio"] = jsa.side_lobe_ratio(proj)
    _emit(record)


@cli.command()
def scenarios():
    """List the shipped design scenarios."""
    _emit(scenario_names())


@cli.command("sweep-window")
@_analysis_options
@click.option("--windows", default="60,120,240", show_default=True, help="Comma-separated windows in nm.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
def sweep_window(source, condition, signal, init, length_mm, temperature, pump_center, bandwidth, matched, grid,
                 windows, out):
    """Purity of a frozen design across analysis windows."""
    res, center, bandwidth, matched = _prepare(source, condition, signal, init, length_mm, temperature,
                                               pump_center, bandwidth, matched)
    ws = _float_list(windows)
    pump = _pump_for(res, center, bandwidth, matched, ws[0], grid)
    rows = [(w, designer.evaluate_profile(res.profile, pump, res.temperature, w, grid)[0]) for w in ws]
    write_csv(_writable(Path(out)) if out else None, ["window_nm", "purity"], rows)


@cli.command("sweep-pump")
@_analysis_options
@click.option("--start", type=float, default=1.5, show_default=True, help="First pump centre in um.")
@click.option("--stop", type=float, default=1.85, show_default=True, help="Last pump centre in um.")
@click.option("--step", type=float, default=0.05, show_default=True)
@click.option("--window", type=float, default=60.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
def sweep_pump(source, condition, signal, init, length_mm, temperature, pump_center, bandwidth, matched, grid,
               start, stop, step, window, out):
    """Re-evaluate a frozen design at other pump wavelengths."""
    res, center, bandwidth, matched = _prepare(source, condition, signal, init, length_mm, temperature,
                                               pump_center, bandwidth, matched)
    base = _pump_for(res, center, bandwidth, matched, window, grid)
    n = int(round((stop - start) / step)) if step > 0 else 0
    rows = []
    for pc in start + step * np.arange(n + 1):
        pump = jsa.PumpSpec(float(pc), base.bandwidth)
        try:
            s, i = phasematch.phase_matched_pair(res.profile.period, pump.center_wavelength, res.temperature)
            purity, _ = designer.evaluate_profile(res.profile, pump, res.temperature, window, grid)
        except (DomainError, phasematch.NoPhaseMatchingError) as exc:
            log.warning("pump %.6g um skipped: %s", pc, exc)
            s = i = purity = float("nan")
        rows.append((float(pc), s, i, purity))
    write_csv(_writable(Path(out)) if out else None, ["pump_um", "signal_um", "idler_um", "purity"], rows)


@cli.command("sweep-temp")
@click.option("--gvm", "condition", type=click.Choice(["1", "2", "3"]), default=None)
@click.option("--design", "design_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--period", "period_um", type=float, default=None, help="Fixed period in um (with --pump).")
@click.option("--pump", type=float, default=None, help="Fixed pump centre in um.")
@click.option("--mode", type=click.Choice(["fixed-period", "gvm-track"]), default="fixed-period", show_default=True,
              help="gvm-track follows the degenerate GVM point itself.")
@click.option("--start", type=float, default=20.0, show_default=True)
@click.option("--stop", type=float, default=120.0, show_default=True)
@click.option("--step", type=float, default=1.0, show_default=True)
@click.option("--design-temp", type=float, default=20.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
def sweep_temp(condition, design_file, period_um, pump, mode, start, stop, step, design_temp, out):
    """Phase-matched wavelengths versus temperature."""
    temps = phasematch.temperature_grid(start, stop, step)
    if step <= 0 and stop != start:
        raise click.UsageError("--step must be positive")
    if mode == "gvm-track":
        if condition is None:
            raise click.UsageError("gvm-track needs --gvm")
        pts = [phasematch.degenerate_point(phasematch.solve_gvm_wavelength(condition, float(T)), float(T))
               for T in temps]
    else:
        given = sum(x is not None for x in (condition, design_file, period_um))
        if given != 1 or (period_um is not None) != (pump is not None):
            raise click.UsageError("give exactly one of --gvm, --design, or --period with --pump")
        if condition is not None:
            _, pts = phasematch.gvm_design_sweep(condition, temps, design_temp)
        elif design_file is not None:
            res = designer.read_design(design_file)
            pts = phasematch.fixed_period_temperature_sweep(res.profile.period, res.pump.center_wavelength, temps)
        else:
            pts = phasematch.fixed_period_temperature_sweep(period_um, pump, temps)
    write_csv(_writable(Path(out)) if out else None, SWEEP_HEADER, _sweep_rows(pts))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="opln", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except DomainError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_USAGE
    except (designer.NumericalError, jsa.DegenerateJsaError, np.linalg.LinAlgError, FloatingPointError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
