"""Alternating pump / duty-cycle optimization of an aperiodically poled crystal.

The loop holds an incumbent (pump centre, target width, duty vector).  Each
round runs one swarm over the two pump parameters with the duty vector
frozen, then one swarm over the duty vector with the pump frozen.  Both
phases minimize the same cost, so the incumbent cost never rises.

Slice geometry
--------------
The cost samples |phi| along the line through the design point on which the
pump wavelength is fixed and signal/idler trade off against each other
(signal = s0 + 2t, idler from energy conservation, t over +-window/4).  That
line crosses the phase-matching ridge for every tilt except 0 and 90 deg.
Along it the target is exp(-(t - t0)^2 / (2 sigma^2)) with t0 the centroid of
|phi|^2 on the slice.  Letting the centre follow the ridge matters for
apodized profiles: a duty cycle that sweeps from 1 to 0 also sweeps the phase
of the first grating harmonic by pi, which translates the PMF without
spoiling its shape.
"""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from . import jsa, pso
from .phasematch import (
    GvmCondition,
    Media,
    NoPhaseMatchingError,
    PhaseMatchPoint,
    default_media,
    delta_k_raw,
    group_indices,
    idler_from,
    phase_matched_pair,
    poling_period,
    pump_from,
    solve_gvm_wavelength,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
EARLY_STOP_ROUNDS = 20
EARLY_STOP_EPS = 1e-8


class NumericalError(RuntimeError):
    """Optimization or evaluation produced unusable numbers."""


@dataclass(frozen=True)
class Schedule:
    pump_iterations: int = 100
    duty_iterations: int = 200
    rounds: int = 200

    def __post_init__(self):
        if min(self.pump_iterations, self.duty_iterations, self.rounds) < 1:
            raise ValueError("schedule entries must be at least 1")


@dataclass(frozen=True)
class DesignProblem:
    signal_wavelength: float  # um
    idler_wavelength: float | None = None  # None: degenerate
    length: float = 30.0  # mm
    temperature: float = 20.0
    slice_count: int = 600
    window: float = 60.0  # nm
    grid: int = 200
    pump_center_offset: float = 5.0  # nm either side of the energy-conservation centre
    pump_width_bounds: tuple = (0.5, 15.0)  # nm
    schedule: Schedule = field(default_factory=Schedule)
    init: str = "erf"

    def __post_init__(self):
        if self.slice_count < 10:
            raise ValueError("slice_count must be at least 10")
        if not self.window > 0:
            raise ValueError("window must be positive")
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        lo, hi = (float(x) for x in self.pump_width_bounds)
        if not 0 < lo < hi:
            raise ValueError("pump width bounds must satisfy 0 < lo < hi")
        object.__setattr__(self, "pump_width_bounds", (lo, hi))
        if not self.pump_center_offset > 0:
            raise ValueError("pump centre offset must be positive")
        if self.init not in ("erf", "flat"):
            raise ValueError("init must be 'erf' or 'flat'")

    @classmethod
    def for_gvm(cls, condition, temperature: float = 20.0, media: Media | None = None, **kw) -> "DesignProblem":
        lam = solve_gvm_wavelength(GvmCondition.parse(condition), temperature, media=media)
        return cls(signal_wavelength=lam, temperature=temperature, **kw)

    @property
    def idler(self) -> float:
        return self.signal_wavelength if self.idler_wavelength is None else self.idler_wavelength

    @property
    def pump_wavelength(self) -> float:
        return float(pump_from(self.signal_wavelength, self.idler))

    def point(self, media: Media | None = None) -> PhaseMatchPoint:
        p, s, i = self.pump_wavelength, self.signal_wavelength, self.idler
        return PhaseMatchPoint(p, s, i, self.temperature, poling_period(p, s, i, self.temperature, media))

    def slice_offsets(self) -> np.ndarray:
        """Pump-equivalent offsets t_m in um, m = 1..N0."""
        q = self.window * 1e-3 / 4.0
        return np.linspace(-q, q, self.slice_count)


@dataclass
class DesignResult:
    pump: jsa.PumpSpec
    profile: jsa.PolingProfile
    purity: float
    cost_history: np.ndarray
    jsa: jsa.JsaGrid | None
    provenance: dict
    target_width: float = float("nan")  # nm
    cost: float = float("nan")
    temperature: float = 20.0
    design_point: PhaseMatchPoint | None = None

    def summary(self) -> dict:
        return {
            "purity": self.purity,
            "cost": self.cost,
            "poling_period_um": self.profile.period,
            "length_mm": self.profile.length,
            "period_count": self.profile.period_count,
            "pump_center_um": self.pump.center_wavelength,
            "pump_bandwidth_nm": self.pump.bandwidth,
            "pump_fwhm_nm": self.pump.fwhm,
            "target_width_nm": self.target_width,
            "temperature_c": self.temperature,
        }


# -- initialization and target -------------------------------------------------


def erf_duty_cycles(length: float, period: float) -> np.ndarray:
    """Duty cycles whose sin(pi*A) traces a Gaussian centred at L/2.

    1/e^2 half-width L/3.  The branch is A >= 0.5 before the centre and
    A <= 0.5 after it, giving one monotone curve from ~1 to ~0.
    """
    M = jsa.period_count(length, period)
    L = length * 1e3
    z = (np.arange(M) + 0.5) * period
    g = np.exp(-2.0 * ((z - L / 2.0) / (L / 3.0)) ** 2)
    a = np.arcsin(np.clip(g, 0.0, 1.0)) / np.pi
    return np.where(z < L / 2.0, 1.0 - a, a)


def initial_profile(problem: DesignProblem, media: Media | None = None, flat: bool | None = None) -> jsa.PolingProfile:
    period = problem.point(media).poling_period
    if flat is None:
        flat = problem.init == "flat"
    if flat:
        return jsa.PolingProfile.uniform(problem.length, period)
    return jsa.PolingProfile(problem.length, period, erf_duty_cycles(problem.length, period))


def target_pmf(m, pump_center: float, target_width: float, problem: DesignProblem, offset: float = 0.0):
    """Gaussian target at slice index m (1-based).

    The m-th pump-wavelength sample sits at ``pump_center + t_m`` and the
    target peaks at ``pump_center + offset`` (um); ``target_width`` is in nm.
    """
    t = problem.slice_offsets()[np.asarray(m) - 1]
    return np.exp(-0.5 * ((t - offset) / (target_width * 1e-3)) ** 2)


def ridge_offset(magnitude, t):
    """Centroid of |phi|^2 along the slice (same units as t)."""
    w = np.asarray(magnitude, dtype=float) ** 2
    tot = w.sum(axis=-1)
    return np.where(tot > 0, (w * t).sum(axis=-1) / np.where(tot > 0, tot, 1.0), 0.0)


def slice_wavelengths(pump_center: float, problem: DesignProblem):
    """(signal, idler) along the fixed-pump cut through the design point."""
    s0 = problem.signal_wavelength * pump_center / problem.pump_wavelength
    signal = s0 + 2.0 * problem.slice_offsets()
    return signal, idler_from(pump_center, signal)


def slice_mismatch(pump_center: float, problem: DesignProblem, media: Media | None = None) -> np.ndarray:
    s, i = slice_wavelengths(pump_center, problem)
    return delta_k_raw(pump_center, s, i, problem.temperature, media)


def shape_cost(magnitude, target) -> float:
    """Relative least-squares misfit after the best positive rescaling.

    min_s sum((s|phi| - X)^2) / sum(X^2) = 1 - <|phi|,X>^2 / (|phi|^2 |X|^2).
    A vanishing slice costs 1.
    """
    a = np.asarray(magnitude, dtype=float)
    x = np.asarray(target, dtype=float)
    aa = float(a @ a)
    xx = float(x @ x)
    if aa == 0.0 or xx == 0.0:
        return 1.0
    ax = float(a @ x)
    return max(0.0, 1.0 - ax * ax / (aa * xx))


def gaussian_misfit(magnitude, t, target_width: float):
    """Shape cost of |phi| against a Gaussian centred on its own ridge.

    Accepts one slice (N,) or a batch (P, N); ``t`` in um, width in nm.
    """
    a = np.asarray(magnitude, dtype=float)
    t0 = ridge_offset(a, t)
    x = np.exp(-0.5 * ((t - np.expand_dims(t0, -1)) / (target_width * 1e-3)) ** 2)
    if a.ndim == 1:
        return shape_cost(a, x)
    return np.array([shape_cost(ai, xi) for ai, xi in zip(a, x)])


class SliceCost:
    """Cost evaluator with the mismatch slice cached per pump centre."""

    def __init__(self, problem: DesignProblem, profile: jsa.PolingProfile, media: Media | None = None):
        self.problem = problem
        self.length = profile.length
        self.period = profile.period
        self.media = media or default_media()
        self._cache: dict = {}

    def evaluator(self, pump_center: float) -> jsa.DutyPmf:
        key = float(pump_center)
        ev = self._cache.get(key)
        if ev is None:
            dk = slice_mismatch(key, self.problem, self.media)
            ev = jsa.DutyPmf(dk, self.length, self.period)
            if len(self._cache) > 4:
                self._cache.clear()
            self._cache[key] = ev
        return ev

    def __call__(self, pump_center: float, target_width: float, duty_cycles) -> float:
        phi = self.evaluator(pump_center)(duty_cycles)
        return gaussian_misfit(np.abs(phi), self.problem.slice_offsets(), target_width)


def cost(pump_center: float, target_width: float, profile: jsa.PolingProfile, problem: DesignProblem,
         media: Media | None = None) -> float:
    """Gaussian-target misfit of |phi| along the slice (dimensionless, in [0, 1])."""
    s, i = slice_wavelengths(pump_center, problem)
    mag = np.abs(jsa.pmf_domains(s, i, pump_center, profile, problem.temperature, media))
    m = np.arange(1, problem.slice_count + 1)
    offset = float(ridge_offset(mag, problem.slice_offsets()))
    return shape_cost(mag, target_pmf(m, pump_center, target_width, problem, offset))


def bandwidth_for_width(target_width: float, pump_center: float, problem: DesignProblem,
                        media: Media | None = None) -> float:
    """Pump bandwidth (nm) that makes a Gaussian ridge of the given width separable.

    With a = k'_p - k'_s and b = k'_p - k'_i the cross term cancels when the
    ridge and pump widths obey sigma_k^2 = -ab sigma_u^2.  For a = -b this is
    the identity map; for ab >= 0 no finite bandwidth works and the upper
    bound is returned.
    """
    s0 = problem.signal_wavelength * pump_center / problem.pump_wavelength
    i0 = float(idler_from(pump_center, s0))
    gp, gs, gi = group_indices(pump_center, s0, i0, problem.temperature, media)
    a, b = gp - gs, gp - gi
    lo, hi = problem.pump_width_bounds
    if a * b >= 0:
        return hi
    bw = abs(a - b) * 2.0 * target_width * pump_center**2 / (s0**2 * math.sqrt(-a * b))
    return float(min(max(bw, lo), hi))


# -- evaluation -----------------------------------------------------------------


def evaluate_profile(profile: jsa.PolingProfile, pump: jsa.PumpSpec, temperature: float, window: float = 60.0,
                     grid: int = 200, media: Media | None = None):
    """Purity and JSA of a frozen profile driven by ``pump``.

    The grid centres on the pair that phase-matches the pump centre.
    """
    s, i = phase_matched_pair(profile.period, pump.center_wavelength, temperature, media=media)
    g = jsa.jsa_grid(pump, jsa.domain_pmf(profile, temperature, media), window, grid, center=(s, i))
    spec = jsa.schmidt_purity(g)
    if not math.isfinite(spec.purity):
        raise NumericalError("non-finite purity")
    return spec.purity, g


def evaluate_design(result: DesignResult, window_nm: float | None = None, grid: int | None = None,
                    pump_override: jsa.PumpSpec | None = None, media: Media | None = None):
    prov = result.provenance.get("problem", {})
    window = window_nm if window_nm is not None else prov.get("window_nm", 60.0)
    n = grid if grid is not None else prov.get("grid", 200)
    pump = pump_override or result.pump
    return evaluate_profile(result.profile, pump, result.temperature, window, n, media)


def matched_bandwidth(profile: jsa.PolingProfile, center: tuple, pump_center: float, temperature: float,
                      window: float = 60.0, grid: int = 200, bounds=(0.5, 15.0), media: Media | None = None):
    """Purity-maximizing pump bandwidth for a fixed profile.

    The PMF grid is computed once; only the pump envelope changes inside the
    bounded scalar search.  Returns (bandwidth_nm, purity).
    """
    from scipy import optimize

    s_ax, i_ax = jsa.grid_axes(center, window, grid)
    S, I = np.meshgrid(s_ax, i_ax, indexing="ij")
    pmf = jsa.domain_pmf(profile, temperature, media)(S, I)

    def neg(bw):
        return -jsa.schmidt_purity(jsa.pef(S, I, jsa.PumpSpec(pump_center, bw)) * pmf).purity

    # coarse scan first so the bounded search starts in the right basin
    lo, hi = bounds
    coarse = np.geomspace(lo, hi, 25)
    vals = [neg(b) for b in coarse]
    k = int(np.argmin(vals))
    a, b = coarse[max(k - 1, 0)], coarse[min(k + 1, coarse.size - 1)]
    r = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-4})
    best = min((r.fun, float(r.x)), (vals[k], float(coarse[k])))
    return best[1], -best[0]


def baseline_purity(problem: DesignProblem, flat: bool, media: Media | None = None):
    """Purity of the flat or erf-initialized crystal under its matched pump."""
    prof = initial_profile(problem, media, flat=flat)
    p = problem.point(media)
    bw, pur = matched_bandwidth(
        prof, (p.signal_wavelength, p.idler_wavelength), p.pump_wavelength, problem.temperature,
        problem.window, problem.grid, problem.pump_width_bounds, media,
    )
    return pur, bw, prof


# -- optimization ------------------------------------------------------------------


@dataclass
class Incumbent:
    pump_center: float
    target_width: float
    duty_cycles: np.ndarray
    cost: float
    round: int = 0  # rounds completed
    history: list = field(default_factory=list)
    stall: int = 0


def _phase_seed(seed: int, rnd: int, phase: int) -> int:
    return int(np.random.SeedSequence([int(seed), rnd, phase]).generate_state(1, dtype=np.uint64)[0])


def problem_to_dict(problem: DesignProblem) -> dict:
    return {
        "signal_um": problem.signal_wavelength,
        "idler_um": problem.idler_wavelength,
        "length_mm": problem.length,
        "temperature_c": problem.temperature,
        "slice_count": problem.slice_count,
        "window_nm": problem.window,
        "grid": problem.grid,
        "pump_center_offset_nm": problem.pump_center_offset,
        "pump_width_nm": list(problem.pump_width_bounds),
        "schedule": {
            "pump_iterations": problem.schedule.pump_iterations,
            "duty_iterations": problem.schedule.duty_iterations,
            "rounds": problem.schedule.rounds,
        },
        "init": problem.init,
    }


def pso_to_dict(cfg: pso.PsoConfig) -> dict:
    return {
        "swarm_size": cfg.swarm_size,
        "inertia": cfg.inertia,
        "cognitive": cfg.cognitive,
        "social": cfg.social,
        "velocity_clamp": cfg.velocity_clamp,
        "init_spread": cfg.init_spread,
        "stall_tolerance": list(cfg.stall_tolerance) if cfg.stall_tolerance else None,
    }


def default_pump_pso() -> pso.PsoConfig:
    return pso.PsoConfig(bounds=((0.0, 1.0), (0.0, 1.0)), swarm_size=40)


def default_duty_pso() -> pso.PsoConfig:
    return pso.PsoConfig(bounds=((0.0, 1.0),), swarm_size=60, init_spread=0.02)


def write_checkpoint(path, inc: Incumbent, provenance: dict) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "round": inc.round,
        "pump_center_um": float(inc.pump_center),
        "target_width_nm": float(inc.target_width),
        "cost": float(inc.cost),
        "stall": inc.stall,
        "duty_cycles": [float(a) for a in inc.duty_cycles],
        "history": [float(c) for c in inc.history],
        "provenance": provenance,
    }
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    os.replace(tmp, path)


def read_checkpoint(path) -> tuple[Incumbent, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version")
    inc = Incumbent(
        pump_center=float(doc["pump_center_um"]),
        target_width=float(doc["target_width_nm"]),
        duty_cycles=np.array(doc["duty_cycles"], dtype=float),
        cost=float(doc["cost"]),
        round=int(doc["round"]),
        history=[float(c) for c in doc["history"]],
        stall=int(doc.get("stall", 0)),
    )
    return inc, doc.get("provenance", {})


def optimize(
    problem: DesignProblem,
    pso_pump: pso.PsoConfig | None = None,
    pso_duty: pso.PsoConfig | None = None,
    seed: int = 0,
    media: Media | None = None,
    threads: int = 1,
    checkpoint: str | os.PathLike | None = None,
    resume: bool = False,
    on_phase: Callable | None = None,
) -> DesignResult:
    """Run the alternating swarm loop and return the best design found.

    Only ``swarm_size``, coefficients, clamp, spread and stall settings are
    taken from the two PSO configs; bounds, iteration counts and seeds come
    from the problem, its schedule and ``seed``.
    """
    media = media or default_media()
    pso_pump = pso_pump or default_pump_pso()
    pso_duty = pso_duty or default_duty_pso()
    point = problem.point(media)  # raises before any swarm work if infeasible
    profile0 = initial_profile(problem, media)
    evaluator = SliceCost(problem, profile0, media)
    M = profile0.period_count
    provenance = {
        "problem": problem_to_dict(problem),
        "pso_pump": pso_to_dict(pso_pump),
        "pso_duty": pso_to_dict(pso_duty),
        "seed": int(seed),
        "poling_period_um": point.poling_period,
    }

    pc0 = point.pump_wavelength
    dc = problem.pump_center_offset * 1e-3
    wlo, whi = problem.pump_width_bounds
    pump_bounds = ((pc0 - dc, pc0 + dc), (wlo, whi))

    inc = None
    if resume and checkpoint is not None and Path(checkpoint).exists():
        inc, old = read_checkpoint(checkpoint)
        if old.get("problem") != provenance["problem"] or old.get("seed") != provenance["seed"]:
            raise ValueError("checkpoint belongs to a different problem or seed")
        if inc.duty_cycles.size != M:
            raise ValueError("checkpoint duty vector does not match the crystal")
        log.info("resuming after round %d (cost %.6g)", inc.round, inc.cost)
    if inc is None:
        # best starting width from a quick 1-D scan of the initial profile
        widths = np.geomspace(wlo, whi, 41)
        costs = [evaluator(pc0, w, profile0.duty_cycles) for w in widths]
        w0 = float(widths[int(np.argmin(costs))])
        inc = Incumbent(pc0, w0, profile0.duty_cycles.copy(), float(min(costs)))

    duty_bounds = ((0.0, 1.0),) * M
    sched = problem.schedule
    while inc.round < sched.rounds:
        r = inc.round
        t0 = time.perf_counter()

        duty = inc.duty_cycles

        def pump_obj(x):
            return evaluator(x[0], x[1], duty)

        cfg = replace(pso_pump, bounds=pump_bounds, max_iterations=sched.pump_iterations,
                      seed=_phase_seed(seed, r, 0))
        res = pso.minimize(pump_obj, cfg, initial=[inc.pump_center, inc.target_width], threads=threads)
        before = inc.cost
        if res.best_cost <= inc.cost:
            inc.pump_center, inc.target_width = float(res.best_position[0]), float(res.best_position[1])
            inc.cost = float(res.best_cost)
        inc.history.extend(np.minimum(res.cost_history, before).tolist())
        log.info("round %d pump phase: cost %.6g (centre %.6f um, width %.4f nm)",
                 r + 1, inc.cost, inc.pump_center, inc.target_width)
        if on_phase:
            on_phase(r + 1, "pump", inc.cost)

        ev = evaluator.evaluator(inc.pump_center)
        t = problem.slice_offsets()
        width = inc.target_width

        def duty_obj(batch):
            return gaussian_misfit(np.abs(ev(batch)), t, width)

        cfg = replace(pso_duty, bounds=duty_bounds, max_iterations=sched.duty_iterations,
                      seed=_phase_seed(seed, r, 1))
        res = pso.minimize(duty_obj, cfg, initial=inc.duty_cycles, batch=True)
        mid = inc.cost
        if res.best_cost <= inc.cost:
            inc.duty_cycles = np.asarray(res.best_position, dtype=float).copy()
            inc.cost = float(res.best_cost)
        inc.history.extend(np.minimum(res.cost_history, mid).tolist())
        log.info("round %d duty phase: cost %.6g (%.1f s)", r + 1, inc.cost, time.perf_counter() - t0)
        if on_phase:
            on_phase(r + 1, "duty", inc.cost)

        inc.stall = inc.stall + 1 if before - inc.cost < EARLY_STOP_EPS else 0
        inc.round = r + 1
        if checkpoint is not None:
            try:
                write_checkpoint(checkpoint, inc, provenance)
            except OSError as exc:
                log.error("checkpoint write failed: %s", exc)
        if inc.stall >= EARLY_STOP_ROUNDS:
            log.info("incumbent stalled for %d rounds; stopping early", inc.stall)
            break

    return finish(problem, inc, provenance, media)


def finish(problem: DesignProblem, inc: Incumbent, provenance: dict, media: Media | None = None) -> DesignResult:
    """Freeze the incumbent into a DesignResult and score it on a fresh grid."""
    point = problem.point(media)
    profile = jsa.PolingProfile(problem.length, point.poling_period, np.clip(inc.duty_cycles, 0.0, 1.0))
    bw = bandwidth_for_width(inc.target_width, inc.pump_center, problem, media)
    pump = jsa.PumpSpec(inc.pump_center, bw)
    history = np.minimum.accumulate(np.asarray(inc.history, dtype=float)) if inc.history else np.array([inc.cost])
    result = DesignResult(pump, profile, float("nan"), history, None, provenance, inc.target_width, inc.cost,
                          problem.temperature, point)
    purity, grid = evaluate_design(result, problem.window, problem.grid, media=media)
    result.purity, result.jsa = purity, grid
    return result


# -- design files ---------------------------------------------------------------------


def design_to_dict(result: DesignResult) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "summary": result.summary(),
        "pump": result.pump.to_dict(),
        "profile": {
            "length_mm": result.profile.length,
            "period_um": result.profile.period,
            "duty_cycles": [float(a) for a in result.profile.duty_cycles],
        },
        "temperature_c": result.temperature,
        "target_width_nm": result.target_width,
        "cost": result.cost,
        "provenance": result.provenance,
    }


def write_design(result: DesignResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(design_to_dict(result), fh, sort_keys=False)


def read_design(path) -> DesignResult:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    try:
        prof = doc["profile"]
        profile = jsa.PolingProfile(float(prof["length_mm"]), float(prof["period_um"]), prof["duty_cycles"])
        pump = jsa.PumpSpec.from_dict(doc["pump"])
        summary = doc.get("summary", {})
        return DesignResult(
            pump=pump,
            profile=profile,
            purity=float(summary.get("purity", float("nan"))),
            cost_history=np.array([]),
            jsa=None,
            provenance=doc.get("provenance", {}),
            target_width=float(doc.get("target_width_nm", float("nan"))),
            cost=float(doc.get("cost", float("nan"))),
            temperature=float(doc.get("temperature_c", 20.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not a design file ({exc})") from None


def write_profile_csv(profile: jsa.PolingProfile, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period_index", "z_start_um", "duty_cycle"])
        for j, a in enumerate(profile.duty_cycles):
            w.writerow([j, repr(float(j * profile.period)), repr(float(a))])


def read_profile_csv(path, length_mm: float | None = None) -> jsa.PolingProfile:
    """Rebuild a profile; without ``length_mm`` the crystal ends at the last period."""
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["period_index", "z_start_um", "duty_cycle"]:
        raise ValueError(f"{path}: not a profile file")
    body = [(int(r[0]), float(r[1]), float(r[2])) for r in rows[1:]]
    if len(body) < 2:
        raise ValueError(f"{path}: need at least two periods to infer the period")
    z = np.array([b[1] for b in body])
    period = float((z[-1] - z[0]) / (len(z) - 1))
    duty = np.array([b[2] for b in body])
    length = length_mm if length_mm is not None else len(body) * period * 1e-3
    return jsa.PolingProfile(length, period, duty)


__all__ = [
    "DesignProblem",
    "DesignResult",
    "NoPhaseMatchingError",
    "Schedule",
    "baseline_purity",
    "cost",
    "evaluate_design",
    "initial_profile",
    "optimize",
    "target_pmf",
]
