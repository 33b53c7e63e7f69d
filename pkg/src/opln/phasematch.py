"""Group-velocity matching and first-order quasi-phase matching.

Type-II roles are fixed: pump and signal ride the ordinary axis, the idler the
extraordinary one.  All roots are found by bisection on fixed brackets.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .dispersion import (
    DomainError,
    SellmeierModel,
    inverse_group_velocity,
    lithium_niobate,
    wave_number,
)

GVM_BRACKET = (2.0, 5.0)
SIGNAL_BRACKET = (2.5, 4.5)
# bisection stops at ~1e-11 um, far below the 1e-4 nm contract
XTOL_UM = 1e-11


class NoPhaseMatchingError(DomainError):
    """No first-order quasi-phase-matched solution exists."""


class GvmCondition(enum.Enum):
    GVM1 = 1  # pump/signal matched, tilt 0 deg
    GVM2 = 2  # pump/idler matched, tilt 90 deg
    GVM3 = 3  # symmetric, tilt 45 deg

    @property
    def tilt_deg(self) -> float:
        return {1: 0.0, 2: 90.0, 3: 45.0}[self.value]

    @classmethod
    def parse(cls, value) -> "GvmCondition":
        if isinstance(value, cls):
            return value
        s = str(value).strip().upper()
        if s.startswith("GVM"):
            s = s[3:]
        return cls(int(s))


@dataclass(frozen=True)
class Media:
    """Refractive-index models for the three interacting fields."""

    pump: SellmeierModel
    signal: SellmeierModel
    idler: SellmeierModel

    @classmethod
    def lithium_niobate_type2(cls, directory=None) -> "Media":
        o = lithium_niobate("o", directory)
        e = lithium_niobate("e", directory)
        return cls(pump=o, signal=o, idler=e)


_DEFAULT_MEDIA: Media | None = None


def default_media() -> Media:
    global _DEFAULT_MEDIA
    if _DEFAULT_MEDIA is None:
        _DEFAULT_MEDIA = Media.lithium_niobate_type2()
    return _DEFAULT_MEDIA


@dataclass(frozen=True)
class PhaseMatchPoint:
    pump_wavelength: float
    signal_wavelength: float
    idler_wavelength: float
    temperature: float
    poling_period: float

    def to_dict(self) -> dict:
        return asdict(self)


def pump_from(signal, idler):
    """Pump wavelength fixed by energy conservation."""
    return 1.0 / (1.0 / np.asarray(signal, dtype=float) + 1.0 / np.asarray(idler, dtype=float))


def idler_from(pump, signal):
    return 1.0 / (1.0 / np.asarray(pump, dtype=float) - 1.0 / np.asarray(signal, dtype=float))


def delta_k_raw(pump, signal, idler, temperature, media: Media | None = None):
    """k_p - k_s - k_i in rad/um, without any grating term."""
    m = media or default_media()
    return (
        wave_number(m.pump, pump, temperature)
        - wave_number(m.signal, signal, temperature)
        - wave_number(m.idler, idler, temperature)
    )


def group_indices(pump, signal, idler, temperature, media: Media | None = None):
    m = media or default_media()
    return (
        inverse_group_velocity(m.pump, pump, temperature),
        inverse_group_velocity(m.signal, signal, temperature),
        inverse_group_velocity(m.idler, idler, temperature),
    )


def tilt_angle(pump, signal, idler, temperature, media: Media | None = None) -> float:
    """Tilt of the phase-matching ridge in degrees, in (-90, 90].

    A vanishing pump/idler mismatch is the GVM2 limit and returns exactly 90.
    """
    gp, gs, gi = group_indices(pump, signal, idler, temperature, media)
    num = -(gp - gs)
    den = gp - gi
    if abs(den) < 1e-15 * max(abs(num), 1e-300):
        return 90.0
    theta = math.degrees(math.atan2(num, den))
    if theta > 90.0:
        theta -= 180.0
    elif theta <= -90.0:
        theta += 180.0
    return theta + 0.0


def gvm_residual(condition: GvmCondition, wavelength, temperature, media: Media | None = None):
    """Residual of a GVM condition at a degenerate wavelength (group-index units)."""
    lam = np.asarray(wavelength, dtype=float)
    gp, gs, gi = group_indices(lam / 2.0, lam, lam, temperature, media)
    if condition is GvmCondition.GVM1:
        return gp - gs
    if condition is GvmCondition.GVM2:
        return gp - gi
    return 2.0 * gp - gs - gi


def _bisect(f, lo, hi, what):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoPhaseMatchingError(f"no {what} root in range [{lo}, {hi}] um")
    return optimize.bisect(f, lo, hi, xtol=XTOL_UM, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_gvm_wavelength(
    condition, temperature: float = 20.0, bracket=GVM_BRACKET, media: Media | None = None
) -> float:
    """Degenerate signal/idler wavelength (um) satisfying ``condition``."""
    cond = GvmCondition.parse(condition)
    lo, hi = bracket
    return _bisect(lambda x: float(gvm_residual(cond, x, temperature, media)), lo, hi, cond.name)


def poling_period(pump, signal, idler, temperature, media: Media | None = None):
    """First-order QPM period (um) that zeroes the mismatch."""
    dk = delta_k_raw(pump, signal, idler, temperature, media)
    if np.any(np.asarray(dk) <= 0):
        raise NoPhaseMatchingError("phase matching impossible at first order (non-positive mismatch)")
    out = 2.0 * math.pi / dk
    return out if np.ndim(out) else float(out)


def degenerate_point(wavelength: float, temperature: float = 20.0, media: Media | None = None) -> PhaseMatchPoint:
    period = poling_period(wavelength / 2.0, wavelength, wavelength, temperature, media)
    return PhaseMatchPoint(wavelength / 2.0, wavelength, wavelength, temperature, period)


def _signal_window(pump, bracket, media: Media):
    # keep both signal and the energy-conserving idler inside the models
    lo, hi = bracket
    ilo, ihi = media.idler.valid_wavelength
    slo, shi = media.signal.valid_wavelength
    lo = max(lo, slo)
    hi = min(hi, shi)
    if 1.0 / pump - 1.0 / ihi > 0:
        lo = max(lo, 1.0 / (1.0 / pump - 1.0 / ihi))
    if 1.0 / pump - 1.0 / ilo > 0:
        hi = min(hi, 1.0 / (1.0 / pump - 1.0 / ilo))
    lo = max(lo, pump * (1 + 1e-9))
    return lo, hi


def phase_matched_pair(
    period: float,
    pump: float,
    temperature: float = 20.0,
    bracket=SIGNAL_BRACKET,
    media: Media | None = None,
    scan_points: int = 241,
):
    """(signal, idler) in um that phase-match ``pump`` at a fixed ``period``.

    The search runs over the signal wavelength with the idler slaved by
    energy conservation.  If the bracket holds several roots, the one
    nearest degeneracy wins.
    """
    m = media or default_media()
    m.pump.check(pump, temperature)
    lo, hi = _signal_window(pump, bracket, m)
    if not lo < hi:
        raise NoPhaseMatchingError(f"empty signal search window for pump {pump} um")
    grating = 2.0 * math.pi / period

    def resid(ls):
        return delta_k_raw(pump, ls, idler_from(pump, ls), temperature, m) - grating

    xs = np.linspace(lo, hi, scan_points)
    rs = resid(xs)
    flips = np.nonzero(np.sign(rs[:-1]) * np.sign(rs[1:]) <= 0)[0]
    if flips.size == 0:
        raise NoPhaseMatchingError(
            f"no phase matching for period {period} um, pump {pump} um at {temperature} C "
            f"(signal searched over [{lo:.4f}, {hi:.4f}] um)"
        )
    roots = [_bisect(lambda x: float(resid(x)), xs[j], xs[j + 1], "QPM") for j in flips]
    degenerate = 2.0 * pump
    signal = min(roots, key=lambda r: abs(r - degenerate))
    return float(signal), float(idler_from(pump, signal))


def phase_match_point(period, pump, temperature=20.0, media: Media | None = None, **kw) -> PhaseMatchPoint:
    s, i = phase_matched_pair(period, pump, temperature, media=media, **kw)
    return PhaseMatchPoint(pump, s, i, temperature, period)


def temperature_grid(start: float, stop: float, step: float = 1.0) -> np.ndarray:
    n = int(round((stop - start) / step)) if step else 0
    return start + step * np.arange(n + 1)


def gvm_temperature_sweep(condition, temperatures, media: Media | None = None):
    cond = GvmCondition.parse(condition)
    return np.array([solve_gvm_wavelength(cond, float(T), media=media) for T in temperatures])


def fixed_period_temperature_sweep(period, pump, temperatures, media: Media | None = None):
    """Phase-matched points at fixed period and pump across temperatures."""
    return [phase_match_point(period, pump, float(T), media=media) for T in temperatures]


def gvm_design_sweep(condition, temperatures, design_temperature=20.0, media: Media | None = None):
    """Fixed-period sweep for the crystal designed at a GVM point.

    The period and pump are frozen at ``design_temperature``; returns the
    phase-matched points as temperature moves.
    """
    lam = solve_gvm_wavelength(condition, design_temperature, media=media)
    design = degenerate_point(lam, design_temperature, media)
    return design, fixed_period_temperature_sweep(
        design.poling_period, design.pump_wavelength, temperatures, media
    )
